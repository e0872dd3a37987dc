#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbsde_ns/flow.hpp"
#include "fbsde_ns/parallel.hpp"
#include "fbsde_ns/rng.hpp"
#include "fbsde_ns/sampler.hpp"
#include "fbsde_ns/solver.hpp"
#include "fbsde_ns/spectral_ops.hpp"

namespace fbsde {

namespace {

constexpr std::uint64_t kPathStream = 0x6d63;

// Per chunk of grid points: walks every path from every output time down to
// level 0, accumulating batch sums and sums of squares of the payoff.
struct Kernel {
    const GridSpec& spec;
    const std::vector<PackedSampler>& slices; // level j: [v, F] at sigma_j; level 0: [u0, F]
    int d;
    int S;          // levels per output interval
    int N;          // output intervals
    int M;
    int B;
    double dsig;
    Integrator integrator;
    // [path][level][component]: xi at level j drives the step from j to j - 1
    const std::vector<double>& xi;
    // [time][batch][component][point]
    std::vector<double>& batch_sum;
    // [time][component][point]
    std::vector<double>& sum_sq;

    std::size_t batch_index(int i, int b, int a, std::size_t p) const {
        const std::size_t np = spec.points();
        return ((static_cast<std::size_t>(i) * B + b) * d + a) * np + p;
    }
    std::size_t sq_index(int i, int a, std::size_t p) const {
        return (static_cast<std::size_t>(i) * d + a) * spec.points() + p;
    }

    void run(std::size_t begin, std::size_t end) const {
        if (d == 3)
            run_fixed<3>(begin, end);
        else
            run_fixed<2>(begin, end);
    }

    // Paths advance in blocks so that each velocity slice is swept by the
    // whole block while its neighbourhood of the chunk is cache resident.
    template <int D>
    void run_fixed(std::size_t begin, std::size_t end) const {
        constexpr int C = 2 * D;
        constexpr int P = 16;
        const int K = N * S;
        const std::size_t count = end - begin;
        std::vector<double> X(P * count * D), acc(P * count * D);
        std::vector<double> nodes(count * D);
        for (std::size_t p = 0; p < count; ++p) {
            const Point node = spec.node(begin + p);
            for (int a = 0; a < D; ++a) nodes[p * D + a] = node[a];
        }
        double y[kMaxDim] = {0, 0, 0}, s0[C], s1[C];
        for (int m0 = 0; m0 < M; m0 += P) {
            const int pb = std::min(P, M - m0);
            for (int i = 1; i <= N; ++i) {
                const int top = i * S;
                for (int q = 0; q < pb; ++q) std::copy(nodes.begin(), nodes.end(), X.begin() + q * count * D);
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int j = top; j >= 1; --j) {
                    const PackedSampler& here = slices[j];
                    // level 0 holds u0 in its velocity slots; slot K + 1 holds v(0)
                    const PackedSampler& next = slices[j == 1 ? K + 1 : j - 1];
                    const double w = j == top ? 0.5 * dsig : dsig;
                    for (int q = 0; q < pb; ++q) {
                        const double* dB = xi.data() + (static_cast<std::size_t>(m0 + q) * (K + 1) + j) * D;
                        double* xq = X.data() + q * count * D;
                        double* aq = acc.data() + q * count * D;
                        for (std::size_t p = 0; p < count; ++p) {
                            double* x = xq + p * D;
                            double* ac = aq + p * D;
                            here.eval_fixed<C>(x, s0);
                            for (int a = 0; a < D; ++a) ac[a] += w * s0[D + a];
                            if (integrator == Integrator::euler_maruyama) {
                                for (int a = 0; a < D; ++a) x[a] += -s0[a] * dsig + dB[a];
                            } else {
                                for (int a = 0; a < D; ++a) y[a] = x[a] - s0[a] * dsig + dB[a];
                                next.eval_fixed<C>(y, s1);
                                for (int a = 0; a < D; ++a) x[a] += -0.5 * (s0[a] + s1[a]) * dsig + dB[a];
                            }
                        }
                    }
                }
                for (int q = 0; q < pb; ++q) {
                    const int b = static_cast<int>(static_cast<long long>(m0 + q) * B / M);
                    for (std::size_t p = 0; p < count; ++p) {
                        const std::size_t o = (q * count + p) * D;
                        slices[0].eval_fixed<C>(X.data() + o, s0);
                        for (int a = 0; a < D; ++a) {
                            const double payoff = s0[a] + acc[o + a] + 0.5 * dsig * s0[D + a];
                            batch_sum[batch_index(i, b, a, begin + p)] += payoff;
                            sum_sq[sq_index(i, a, begin + p)] += payoff * payoff;
                        }
                    }
                }
            }
        }
    }
};

} // namespace

std::vector<double> McEstimate::functional_std_error(
    const std::function<ScalarField(const VectorField&)>& op, double p) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < batch_means.size(); ++i) {
        const auto& batches = batch_means[i];
        const int B = static_cast<int>(batches.size());
        std::vector<ScalarField> vals;
        for (const auto& bm : batches) vals.push_back(op(bm));
        const auto& spec = vals.front().spec();
        ScalarField se(spec);
        for (std::size_t x = 0; x < spec.points(); ++x) {
            double mean = 0.0;
            for (int b = 0; b < B; ++b) mean += vals[b][x];
            mean /= B;
            double var = 0.0;
            for (int b = 0; b < B; ++b) var += (vals[b][x] - mean) * (vals[b][x] - mean);
            se[x] = B > 1 ? std::sqrt(var / (B - 1) / B) : 0.0;
        }
        out.push_back(lp_norm(se, p));
    }
    return out;
}

McEstimate evaluate_g_mc(const TimeIndexedField& v, const VectorField& u0, const SolverConfig& cfg,
                         std::uint64_t seed) {
    const auto& spec = v.spec();
    if (!(u0.spec() == spec)) throw std::invalid_argument("evaluate_g_mc: u0 and v grids differ");
    if (cfg.paths < 100) throw std::invalid_argument("evaluate_g_mc: need M >= 100 paths");
    if (cfg.batches < 2 || cfg.batches > cfg.paths)
        throw std::invalid_argument("evaluate_g_mc: batches must lie in [2, M]");
    if (cfg.nu < 0.0) throw std::invalid_argument("evaluate_g_mc: negative viscosity");
    require_finite(u0.data(), "initial velocity");
    const int d = spec.dim();
    const auto grid = v.time_grid();
    const int N = grid.steps;
    const int S = cfg.substeps;
    const int K = N * S;
    const double dsig = (grid.T - grid.t0) / K;
    const double bound = stability_bound(v);
    if (dsig > bound) {
        std::ostringstream msg;
        msg << "evaluate_g_mc: path step " << dsig << " exceeds the stability bound h/(2 max|v|) = " << bound;
        throw std::invalid_argument(msg.str());
    }

    // samplers live on a refined grid: trigonometric upsampling cuts the
    // multilinear interpolation bias by the square of the refinement
    const int fine_n = spec.n() * cfg.interp_refinement;
    const GridSpec fine = GridSpec::make(d, fine_n, spec.box_length());
    const auto make_slice = [&](const VectorField& carried, const VectorField& vel) {
        PackedSampler s(fine, 2 * d);
        s.load(spectral_resample(carried, fine_n), 0);
        s.load(spectral_resample(pressure_gradient(vel), fine_n), d);
        return s;
    };
    std::vector<PackedSampler> slices;
    slices.reserve(K + 2);
    for (int j = 0; j <= K; ++j) {
        const auto vj = v.at(grid.t0 + j * dsig);
        slices.push_back(make_slice(j == 0 ? u0 : vj, vj));
    }
    slices.push_back(make_slice(v.at(grid.t0), v.at(grid.t0)));

    const std::size_t np = spec.points();
    // without noise every path coincides, so one path is exact
    const int B = cfg.nu > 0.0 ? cfg.batches : 1;
    const int M = cfg.nu > 0.0 ? cfg.paths : 1;
    std::vector<double> batch_sum(static_cast<std::size_t>(N + 1) * B * d * np, 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(N + 1) * d * np, 0.0);

    std::vector<double> xi(static_cast<std::size_t>(M) * (K + 1) * d, 0.0);
    {
        const NormalStream noise(derive_seed(seed, kPathStream));
        const double sd = std::sqrt(2.0 * cfg.nu * dsig);
        double z[kMaxDim];
        for (int m = 0; m < M; ++m)
            for (int j = 1; j <= K; ++j) {
                noise.draws(m, j, z, d);
                for (int a = 0; a < d; ++a) xi[(static_cast<std::size_t>(m) * (K + 1) + j) * d + a] = sd * z[a];
            }
    }
    Kernel kernel{spec, slices, d, S, N, M, B, dsig, cfg.integrator, xi, batch_sum, sum_sq};
    parallel_for(np, std::max<std::size_t>(1, np / 256), [&](std::size_t b, std::size_t e) { kernel.run(b, e); });

    std::vector<VectorField> snaps;
    McEstimate est{TimeIndexedField::constant(grid, u0), {}, {}, {}};
    for (int i = 0; i <= N; ++i) {
        VectorField mean(spec, grid.time(i));
        VectorField se(spec, grid.time(i));
        std::vector<VectorField> bms;
        if (i == 0) {
            mean = u0;
            mean.set_time_tag(grid.time(0));
            bms.assign(B, mean);
        } else {
            for (int b = 0; b < B; ++b) {
                VectorField bm(spec, grid.time(i));
                const int count = static_cast<int>(static_cast<long long>(b + 1) * M / B) -
                                  static_cast<int>(static_cast<long long>(b) * M / B);
                for (int a = 0; a < d; ++a) {
                    auto dst = bm.component(a);
                    const double* src = batch_sum.data() + ((static_cast<std::size_t>(i) * B + b) * d + a) * np;
                    for (std::size_t p = 0; p < np; ++p) dst[p] = src[p] / count;
                }
                bms.push_back(std::move(bm));
            }
            for (int a = 0; a < d; ++a) {
                auto mdst = mean.component(a);
                auto sdst = se.component(a);
                const double* sq = sum_sq.data() + (static_cast<std::size_t>(i) * d + a) * np;
                for (std::size_t p = 0; p < np; ++p) {
                    double total = 0.0;
                    for (int b = 0; b < B; ++b)
                        total += batch_sum[((static_cast<std::size_t>(i) * B + b) * d + a) * np + p];
                    const double mu = total / M;
                    const double var = M > 1 ? std::max(0.0, (sq[p] - M * mu * mu) / (M - 1)) : 0.0;
                    mdst[p] = mu;
                    sdst[p] = std::sqrt(var / M);
                }
            }
        }
        snaps.push_back(std::move(mean));
        est.std_error_l2.push_back(lp_norm(se, 2.0));
        est.std_error.push_back(std::move(se));
        est.batch_means.push_back(std::move(bms));
    }
    est.g = TimeIndexedField(grid, std::move(snaps));
    return est;
}

} // namespace fbsde
