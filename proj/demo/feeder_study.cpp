// Feasible loading intervals and linear model errors for a multiphase feeder.
//
//   mplf_demo [data_dir] [feeder] [injections]
//
// Defaults to the 37-bus feeder with mixed wye and delta loads.

#include <cstdio>
#include <string>

#include "mplf/io.hpp"

using namespace mplf;

namespace {

void print_interval(const char* label, const FeasibleInterval& iv) {
    std::printf("  %-28s [%+.4f, %+.4f]%s\n", label, iv.kappa_min, iv.kappa_max,
                iv.min_unbounded || iv.max_unbounded ? "  (search bound reached)" : "");
}

} // namespace

int main(int argc, char** argv) {
    const std::string data = argc > 1 ? argv[1] : MPLF_DATA_DIR;
    const std::string feeder = argc > 2 ? argv[2] : "ieee37";
    const std::string loads = argc > 3 ? argv[3] : "mixed";
    try {
        const NetworkModel model = io::load_network(data + "/" + feeder + "/network.json");
        const ZeroLoadProfile w = zero_load_voltage(model);
        const InjectionSet s = io::load_injections(model, data + "/" + feeder + "/injections_" + loads + ".json");
        std::printf("%s (%s loads): %ld phases, %ld delta connections\n", feeder.c_str(), loads.c_str(),
                    static_cast<long>(model.phase_count()), static_cast<long>(model.delta_count()));

        const SolveResult nominal = solve_fixed_point(model, w, s);
        std::printf("nominal load flow: %d iterations, |v| in [%.4f, %.4f]\n", nominal.iterations,
                    nominal.v.cwiseAbs().minCoeff(), nominal.v.cwiseAbs().maxCoeff());

        std::printf("loading factors kappa with a certified unique solution for kappa * s:\n");
        const BasePoint zero = BasePoint::zero_load(model, w);
        print_interval("radius scan, zero load", feasible_interval(model, w, zero, s, CertificateKind::radius_scan));
        print_interval("closed form, zero load", feasible_interval(model, w, zero, s, CertificateKind::closed_form));
        const double base_kappa = 1.0;
        print_interval("radius scan, around kappa=1",
                       recentered_interval(model, w, s, base_kappa, CertificateKind::radius_scan).interval);

        const std::vector<double> grid = kappa_grid(-1.5, 1.5, 61);
        const ContinuationResult sweep = linear_error_sweep(model, w, s, base_kappa, grid);
        std::printf("relative voltage errors of models linearized at kappa=1:\n");
        std::printf("  %8s %12s %12s\n", "kappa", "FOT", "FPL");
        double fot_max = 0.0, fpl_max = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!sweep.fot_errors[k]) {
                std::printf("  %+8.2f %12s %12s\n", grid[k], "-", "-");
                continue;
            }
            fot_max = std::max(fot_max, *sweep.fot_errors[k]);
            fpl_max = std::max(fpl_max, *sweep.fpl_errors[k]);
            if (k % 5 == 0) std::printf("  %+8.2f %12.3e %12.3e\n", grid[k], *sweep.fot_errors[k], *sweep.fpl_errors[k]);
        }
        std::printf("  %8s %12.3e %12.3e\n", "max", fot_max, fpl_max);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
