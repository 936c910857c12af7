#pragma once

#include <cstdint>
#include <iosfwd>

#include "stance/aliasdata.hpp"

namespace stance {

// Person-name alias corpus built from random syllables. Every entity gets a
// canonical "First Last" name plus, with the given probabilities, the
// token-permuted "Last, First", the initialism "F. Last", a copy of the
// canonical name with 1-2 character corruptions, and the bare last name.
// Entities always carry at least two aliases.
struct SynthConfig {
  std::size_t entities = 500;
  double p_permutation = 0.8;
  double p_initialism = 0.6;
  double p_corruption = 0.6;
  double p_last_name = 0.15;
  bool weighted = true;  // Zipf-like weights in a third column
  std::uint64_t seed = 1;
};

AliasGraph synthesize_corpus(const SynthConfig& config);

// `entity_id \t mention [\t weight]`, one line per edge in entity order.
void write_graph(std::ostream& out, const AliasGraph& g, bool with_weights = true);

}  // namespace stance
