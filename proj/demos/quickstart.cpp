// Simulate design 2, fit the structural quantile curves, compare with the
// naive comparator, and print an outer set past the identified range.

#include <cstdio>

#include <ivcr/ivcr.hpp>

int main() {
    const auto sample = ivcr::generate({2, 10000, 42, 0});
    const auto& data = sample.data;
    std::size_t censored = 0;
    for (const auto& r : data.records()) censored += r.event == ivcr::Event::censored;
    std::printf("n = %zu, censored share = %.3f\n", data.size(),
                static_cast<double>(censored) / static_cast<double>(data.size()));

    ivcr::FitConfig cfg;
    const auto fit = ivcr::fit_curve(data, cfg);
    const auto naive = ivcr::naive_curve(data, cfg.grid);
    const auto truth = ivcr::ground_truth(2);
    std::printf("y_hat = (%.4f, %.4f), u_hat = %.2f (truth %.2f)\n\n", fit.frontiers.y_hat[0],
                fit.frontiers.y_hat[1], fit.frontiers.u_hat, truth.u_Y);

    std::printf("   u     qte    naive   truth\n");
    for (std::size_t m = 9; m < fit.grid.size(); m += 10) {
        if (!fit.reported[m]) break;
        std::printf("%5.2f %7.3f %7.3f %7.3f\n", fit.grid[m], fit.contrast(m, 1, 0),
                    naive.theta[m][1] - naive.theta[m][0], truth.qte(fit.grid[m]));
    }

    const auto surface = ivcr::assemble_surface(data, cfg.surface);
    const auto f = ivcr::bounds_frontiers(data, fit);
    const auto set = ivcr::outer_set(0.7, surface, f);
    std::printf("\nouter set at u = 0.7: case %s\n", ivcr::to_string(set.tag));
    for (const auto& p : set.pieces)
        std::printf("  [%.3f, %g] x [%.3f, %g]\n", p.lo[0], p.hi[0], p.lo[1], p.hi[1]);
    return 0;
}
