// SPDX-License-Identifier: Apache-2.0
//
// Single-digit addition: prompts "a+b?" for a, b in [0, 9], answered with a
// two-digit string ("07", "15"). Fixed-width answers make substring matching
// equivalent to exact matching for a length-2 policy.
#pragma once

#include <string>
#include <vector>

#include "rlvr/dataset.hpp"
#include "rlvr/policy.hpp"

namespace rlvr::toy {

inline constexpr std::size_t kArithmeticAnswerLength = 2;

inline std::string padded_sum(int a, int b) {
  const int s = a + b;
  return std::string{static_cast<char>('0' + s / 10), static_cast<char>('0' + s % 10)};
}

/// The 100 addition prompts with ids "<prefix><a>+<b>".
inline std::vector<PromptInstance> arithmetic_prompts(const std::string& id_prefix) {
  std::vector<PromptInstance> out;
  out.reserve(100);
  for (int a = 0; a <= 9; ++a) {
    for (int b = 0; b <= 9; ++b) {
      const auto q = std::to_string(a) + "+" + std::to_string(b) + "?";
      out.push_back({id_prefix + std::to_string(a) + "+" + std::to_string(b), q, padded_sum(a, b), 110});
    }
  }
  return out;
}

inline Vocabulary digit_vocabulary() {
  return Vocabulary::from_tokens({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"}, "");
}

/// Train and test hold the same questions under different ids: a tabular
/// policy memorizes, it cannot generalize to unseen questions.
inline DatasetSplit arithmetic_split() {
  return DatasetSplit{arithmetic_prompts("train-"), arithmetic_prompts("test-"), {}};
}

}  // namespace rlvr::toy
