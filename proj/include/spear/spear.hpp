#pragma once
// Convenience include for the whole library.

#include "spear/causal_graph.hpp"
#include "spear/corpus.hpp"
#include "spear/encoder.hpp"
#include "spear/errors.hpp"
#include "spear/lemma.hpp"
#include "spear/model.hpp"
#include "spear/rng.hpp"
#include "spear/schema.hpp"
#include "spear/scorer.hpp"
#include "spear/training.hpp"
