// Pits the weighting schemes against each other on a noisy two-loss
// regression and prints the pairwise win-rate table over a seed battery.

#include <cstdio>

#include "covbalance/covbalance.hpp"

int main() {
    using namespace covbalance;

    RunConfig cfg;
    cfg.problem.kind = "mixed_norm";
    cfg.problem.dim = 5;
    cfg.problem.noise = 0.05;
    cfg.optimizer.kind = "sgd";
    cfg.optimizer.lr = 1e-2;
    cfg.iterations = 3000;
    cfg.record_every = 100;
    cfg.seed = 1;

    const std::vector<std::string> names = {"cov", "equal", "uncertainty", "gradnorm", "mgda"};
    CompareResult result = compare_strategies(cfg, names, 16, 4);

    std::printf("win rate of row against column, 16 seeds, final losses + distance\n\n");
    std::printf("%-12s", "");
    for (const auto& n : result.strategies) std::printf(" %11s", n.c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < result.strategies.size(); ++i) {
        std::printf("%-12s", result.strategies[i].c_str());
        for (std::size_t j = 0; j < result.strategies.size(); ++j) {
            std::printf(" %11.3f", result.win_rates[i][j]);
        }
        std::printf("\n");
    }
    return 0;
}
