#pragma once

// Umbrella header for the full reranking toolkit.

#include "llmrank/aggregate.hpp"
#include "llmrank/bm25.hpp"
#include "llmrank/core.hpp"
#include "llmrank/dataio.hpp"
#include "llmrank/http_backend.hpp"
#include "llmrank/metrics.hpp"
#include "llmrank/rerank.hpp"
#include "llmrank/score_cache.hpp"
#include "llmrank/scorer.hpp"
#include "llmrank/tokenize.hpp"
