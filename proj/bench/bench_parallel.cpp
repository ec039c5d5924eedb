// timing harness for the batch gradient fan-out: the same training run at
// workers=1 (the serial reference path) and at increasing worker counts, with
// an agreement check that the parallel path reproduces the serial parameters.
//
// usage: gruwe_bench [n_sequences] [epochs]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "gruwe/eval.hpp"

using namespace gruwe;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double max_param_diff(const GruweParams& a, const GruweParams& b) {
    double worst = 0.0;
    std::vector<const Parameter*> pa, pb;
    a.visit([&](const Parameter& p) { pa.push_back(&p); });
    b.visit([&](const Parameter& p) { pb.push_back(&p); });
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t k = 0; k < pa[i]->value.data.size(); ++k)
            worst = std::max(worst,
                             std::fabs(pa[i]->value.data[k] - pb[i]->value.data[k]));
    return worst;
}

std::vector<std::size_t> worker_grid() {
    // always run 2 and 4 workers so the parallel path is compared (and its
    // agreement checked) even on a single-core host; wider grids only where
    // the hardware can actually schedule them
    const std::size_t hc = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::size_t> grid{1, 2, 4};
    for (std::size_t w : {8u, 16u})
        if (w <= hc) grid.push_back(w);
    if (hc > grid.back()) grid.push_back(hc);
    return grid;
}

struct Row {
    std::size_t workers;
    double seconds;
    double diff; // vs the serial result
};

void print_rows(const std::vector<Row>& rows) {
    std::printf("  %-8s %-9s %-9s %s\n", "workers", "seconds", "speedup",
                "max |param - serial|");
    for (const auto& r : rows)
        std::printf("  %-8zu %-9.3f %-9.2f %.3g\n", r.workers, r.seconds,
                    rows.front().seconds / r.seconds, r.diff);
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t n_seq = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 192;
    const std::size_t epochs = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 3;
    constexpr double kAgreeTol = 1e-10;
    bool all_agree = true;

    std::printf("host reports %u hardware thread(s); speedup above that width is "
                "not expected\n\n",
                std::max(1u, std::thread::hardware_concurrency()));

    // --- forecasting workload -----------------------------------------------------
    {
        RngState rng(1);
        DecayProcessConfig dc;
        dc.n_seq = n_seq;
        dc.dim = 4;
        dc.t_span = 10.0;
        auto series = gen_decay_process(rng, dc).series;

        TrainOptions opt;
        opt.epochs = epochs;
        opt.batch_size = 16;
        opt.one_step_prefix_targets = true;
        opt.seed = 2;

        std::printf("forecast training: %zu sequences, hidden 32, batch %zu, %zu epochs\n",
                    n_seq, opt.batch_size, epochs);
        std::vector<Row> rows;
        GruweParams serial;
        for (std::size_t w : worker_grid()) {
            GruweParams p(4, 32, 4, 1);
            RngState init(3);
            init_params(p, init);
            opt.workers = w;
            const double t0 = now_seconds();
            train_forecast(p, series, {}, opt);
            const double secs = now_seconds() - t0;
            if (w == 1) serial = p;
            rows.push_back({w, secs, max_param_diff(serial, p)});
            all_agree = all_agree && rows.back().diff <= kAgreeTol;
        }
        print_rows(rows);
    }

    // --- event-stream workload ----------------------------------------------------
    {
        RngState rng(4);
        const auto events = gen_poisson_events(rng, n_seq / 2, 1.0, 20.0).sequences;

        TrainOptions opt;
        opt.epochs = epochs;
        opt.batch_size = 16;
        opt.mc_samples = 20;
        opt.seed = 5;

        std::printf("\nevent-stream training: %zu sequences, hidden 16, batch %zu, %zu epochs\n",
                    events.size(), opt.batch_size, epochs);
        std::vector<Row> rows;
        GruweParams serial;
        for (std::size_t w : worker_grid()) {
            GruweParams p(1, 16, 1, 1);
            RngState init(6);
            init_params(p, init);
            opt.workers = w;
            const double t0 = now_seconds();
            train_tpp(p, events, {}, opt);
            const double secs = now_seconds() - t0;
            if (w == 1) serial = p;
            rows.push_back({w, secs, max_param_diff(serial, p)});
            all_agree = all_agree && rows.back().diff <= kAgreeTol;
        }
        print_rows(rows);
    }

    if (!all_agree) {
        std::printf("\nFAIL: a parallel run diverged from the serial reference by more "
                    "than %.0e\n", kAgreeTol);
        return 1;
    }
    std::printf("\nall worker counts reproduce the serial reference (tolerance %.0e)\n",
                kAgreeTol);
    return 0;
}
