#pragma once

#include "vulngraph/clustering.hpp"
#include "vulngraph/config.hpp"
#include "vulngraph/cve_feed.hpp"
#include "vulngraph/date.hpp"
#include "vulngraph/dpkg.hpp"
#include "vulngraph/error.hpp"
#include "vulngraph/evaluation.hpp"
#include "vulngraph/features.hpp"
#include "vulngraph/graph.hpp"
#include "vulngraph/matching.hpp"
#include "vulngraph/matrix.hpp"
#include "vulngraph/pca.hpp"
#include "vulngraph/pipeline.hpp"
#include "vulngraph/records.hpp"
#include "vulngraph/report.hpp"
#include "vulngraph/rng.hpp"
#include "vulngraph/split.hpp"
#include "vulngraph/store.hpp"
#include "vulngraph/synthetic.hpp"
#include "vulngraph/text.hpp"
#include "vulngraph/topic_model.hpp"
#include "vulngraph/training.hpp"
