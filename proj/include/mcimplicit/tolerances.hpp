#pragma once

namespace mcimplicit {

// Central tolerance table. Every numerical tolerance used by the library
// defaults to an entry here; operations that accept an explicit tolerance
// parameter can override per call (and RunConfig carries a copy per run).
struct ToleranceTable {
  double orthonormality_abs = 1e-10;   // ||V^T V - I||_F for orthonormal bases
  double reconstruction_rel = 1e-8;    // relative reconstruction checks
  double symmetry_abs = 1e-10;         // max-norm symmetry check for eig input
  double rank_deficiency_rel = 1e-12;  // sigma_min / sigma_max cutoff for polar
  double unit_norm_abs = 1e-8;         // ||Z|| = 1 check in alignment_score
  double budget_slack_abs = 1e-8;      // triangle-inequality slack in budgets
};

inline const ToleranceTable& default_tolerances() {
  static const ToleranceTable table{};
  return table;
}

}  // namespace mcimplicit
