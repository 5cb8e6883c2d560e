#pragma once

#include "vulnmap/cpe.hpp"
#include "vulnmap/csv.hpp"
#include "vulnmap/error.hpp"
#include "vulnmap/fuzzy.hpp"
#include "vulnmap/ingest.hpp"
#include "vulnmap/input.hpp"
#include "vulnmap/lookup.hpp"
#include "vulnmap/match.hpp"
#include "vulnmap/records.hpp"
#include "vulnmap/repo.hpp"
#include "vulnmap/report.hpp"
#include "vulnmap/store.hpp"
#include "vulnmap/text.hpp"
#include "vulnmap/pipeline.hpp"
