// Solves the p-Laplacian with singular data along a truncation ladder and
// prints, per level, the data integrals, the gradient norms and the implied
// weighted-estimate constant.
//
//   demo_truncation_sweep [n] [p] [q] [beta]

#include <iomanip>
#include <iostream>

#include "vws/vws.hpp"

int main(int argc, char** argv) {
  try {
    const int n = argc > 1 ? std::stoi(argv[1]) : 64;
    const double p = argc > 2 ? std::stod(argv[2]) : 3.0;
    const double q = argc > 3 ? std::stod(argv[3]) : 2.8;
    vws::SingularRHS rhs;
    if (argc > 4) rhs.beta = std::stod(argv[4]);

    const vws::Grid g(2, n);
    const vws::VectorField f = rhs.sample(g);
    const vws::FluxPtr flux = vws::make_flux("p_laplacian", 2, 1, {{"p", p}});
    std::cout << "beta p = " << rhs.beta * p << ", beta q = " << rhs.beta * q
              << (vws::SingularRHS::separates(rhs.beta, 2, p, q) ? " (f in L^q, not L^p)\n" : "\n");

    const auto seq = vws::run_sequence(*flux, f, vws::default_levels(), vws::SolverConfig{});
    std::cout << std::setw(6) << "k" << std::setw(14) << "int|f|^p" << std::setw(14) << "int|f|^q" << std::setw(14)
              << "|grad u|_q" << std::setw(14) << "apri2" << std::setw(8) << "iters\n";
    vws::EstimateContext ctx;
    ctx.beta = rhs.beta;
    for (const auto& lv : seq.levels) {
      ctx.k = lv.k;
      const auto rep = vws::apri2_report(lv.result.u, lv.f_k, p, q, ctx);
      const double ip = std::pow(vws::lp_norm(lv.f_k, p), p), iq = std::pow(vws::lp_norm(lv.f_k, q), q);
      std::cout << std::setw(6) << lv.k << std::setw(14) << ip << std::setw(14) << iq << std::setw(14)
                << vws::lp_norm(vws::gradient(lv.result.u), q) << std::setw(14) << rep.constant << std::setw(7)
                << lv.result.iterations << "\n";
    }
    if (seq.failure) {
      std::cerr << "stopped: " << *seq.failure << "\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
