#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hpo/core.hpp"
#include "hpo/grpo.hpp"
#include "hpo/segalign.hpp"
#include "oracles/reward_oracle.hpp"

namespace fixture {

// A reference document and a group of noisy streamed translations of it.
struct Group {
  hpo::ReferenceDocument reference;
  std::vector<hpo::Trajectory> hypotheses;
};

// 1-4 reference sentences; each hypothesis drops, garbles or inserts whole
// sentences and words at random and streams its tokens over the chunks.
Group random_group(std::mt19937_64& rng, int group_size, double chunk_s = 1.0);

// Independent measurement of one hypothesis: own sentence split, brute-force
// alignment, oracle LAAL and oracle proxy quality per link.
std::vector<oracle::Link> oracle_links(const hpo::Trajectory& hypothesis, const hpo::ReferenceDocument& reference);

// Trajectory writing `sentences` (already tokenized text) with every token of
// sentence k in chunk `chunks[k]`.
hpo::Trajectory streamed(const std::string& id, const std::vector<std::string>& sentences,
                         const std::vector<int>& chunks, int num_chunks, double chunk_s);

// One random configuration of the toy policy: random theta, theta_old and
// theta_ref, two groups of rollouts on a small simulated corpus, random
// rewards. Returns the relative error between the analytic gradient of J and
// central finite differences with step h.
double gradient_check(std::mt19937_64& rng, hpo::grpo::ObjectiveMode mode, double h = 1e-5);

}  // namespace fixture
