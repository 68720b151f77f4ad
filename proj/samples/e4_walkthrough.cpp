// Walk through a corank-one instance: certify its nc-rank, evaluate the
// recession function on the witness direction, run the minimizing-movement
// flow and read the shrunk subspace off the flow direction.

#include <iomanip>
#include <iostream>

#include "ncscale/generators.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/scaling_engine.hpp"

int main() {
  using namespace ncscale;
  const Instance e4 = make_e4();
  const MatrixTuple& a = e4.tuple;

  FlowConfig cfg;
  const RankCertificate cert = ncrank(a, cfg);
  std::cout << "nc-rank " << cert.ncrank << " (bounds " << cert.lower << ".."
            << cert.upper << ", certified " << std::boolalpha
            << cert.certified << ")\n";

  const Hermitian h = flag_direction(cert.upper_witness);
  std::cout << "f_inf(H_U) formula " << finfty_formula(a, h) << ", numeric "
            << finfty_numeric(a, h, 1000.0) << "\n";

  const PointScaling ray = scaling_from_log_point(a, 20.0 * h);
  std::cout << "residual on the ray at t = 20: " << ray.report.sum << "\n";

  cfg.max_iters = 500;
  const FlowTrace mm = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  std::cout << "minimizing movement: " << mm.records.size() << " records, stop "
            << to_string(mm.stop) << ", min slope " << std::setprecision(6)
            << mm.min_slope() << "\n";

  if (const auto dir = tail_direction(mm, cfg.direction_window)) {
    const auto flags = round_direction(*dir, cfg.round_tol);
    const Subspace target = Subspace::coordinate(3, {0, 1});
    for (const auto& u : flags) {
      if (u.dim() != 2) continue;
      std::cout << "angle to span(e1, e2): "
                << max_principal_angle(u.basis(), target.basis()) << "\n";
    }
  }
  return 0;
}
