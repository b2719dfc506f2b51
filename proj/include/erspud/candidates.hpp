#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "erspud/densela.hpp"

namespace erspud {

// Which constraint vector r produced a candidate.
struct CandidateSource {
  enum class Kind { column, column_pair, basis_vector, projected_column };
  Kind kind = Kind::column;
  std::size_t first = 0;   // column j, pair j1, or basis index i
  std::size_t second = 0;  // pair j2; projection round for projected_column

  std::string describe() const {
    switch (kind) {
      case Kind::column: return "Ye_" + std::to_string(first);
      case Kind::column_pair: return "Ye_" + std::to_string(first) + "+Ye_" + std::to_string(second);
      case Kind::basis_vector: return "e_" + std::to_string(first);
      case Kind::projected_column:
        return "P_" + std::to_string(second) + " Ye_" + std::to_string(first);
    }
    return "?";
  }
};

struct Candidate {
  Vec w;  // weights against the original (unpreconditioned) Y
  Vec s;  // candidate row, s = w^T Y
  double objective = 0.0;
  CandidateSource source;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  // Constraint columns skipped because they were zero or the LP was infeasible.
  std::vector<std::size_t> skipped;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

}  // namespace erspud
