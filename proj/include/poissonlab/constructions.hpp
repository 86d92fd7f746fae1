#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "poissonlab/dynamics.hpp"
#include "poissonlab/numeric.hpp"
#include "poissonlab/rng.hpp"

namespace poissonlab {

// ---------------------------------------------------------------------------
// Product-odometer construction: diagonal Z-action on a product of dyadic
// odometer coordinates, with F^2 = 1 + sum_n 2^n 1_{B_n} and mu = F^2 dP.
// Block n consists of n coordinates; its almost-invariant set reads one
// odometer bit at level m(n) = n^2 + ceil(2 log2 n), which keeps
// P(A_n \ S_g A_n) = |g| 2^{-m(n)} <= 2^{-n^2}/n for |g| <= n.
// Carry propagation into that bit is sampled through the uniform low-bits
// variable, so no wide-integer arithmetic is needed.
// ---------------------------------------------------------------------------
class PropTConstruction {
public:
    explicit PropTConstruction(int levels = 12) : levels_(levels) {
        if (levels_ < 1 || levels_ > 24) {
            throw std::invalid_argument("PropTConstruction: levels in [1, 24]");
        }
        offsets_.push_back(0);
        bit_scale_.push_back(0.0);  // blocks are 1-based
        for (int n = 1; n <= levels_; ++n) {
            offsets_.push_back(offsets_.back() + n);
            bit_scale_.push_back(std::pow(2.0, -bit_level(n)));
        }
    }

    int levels() const { return levels_; }
    int coordinates() const { return offsets_.back(); }

    // Bit level read by block n.
    static int bit_level(int n) {
        if (n == 1) return 1;
        const int extra = static_cast<int>(std::ceil(2.0 * std::log2(static_cast<double>(n))));
        return n * n + extra;
    }

    // P(A_n triangle S_g A_n) for one odometer coordinate: the shift acts on
    // bit `bit` through its residue r mod 2^{bit+1}, flipping with
    // probability min(r, 2^{bit+1} - r) / 2^{bit}.
    static double flip_prob(int bit, long g) {
        if (g == 0) return 0.0;
        if (bit <= 61) {
            const long period = 1L << (bit + 1);
            const long r = ((g % period) + period) % period;
            return static_cast<double>(std::min(r, period - r)) /
                   static_cast<double>(1L << bit);
        }
        return std::abs(static_cast<double>(g)) * std::pow(2.0, -bit);
    }

    // Exact flip count over one period 2^{bit+1} of the odometer, for the
    // enumeration oracle in the tests.
    static long flip_count_enumerated(int bit, long g) {
        const long period = 1L << (bit + 1);
        long flips = 0;
        for (long x = 0; x < period; ++x) {
            const long y = ((x + g) % period + period) % period;
            if (((x >> bit) & 1) != ((y >> bit) & 1)) ++flips;
        }
        return flips;
    }

    struct Sample {
        std::vector<std::uint8_t> bits;  // odometer bit at the block's level
        std::vector<double> lows;        // uniform low-bits fraction
    };

    Sample draw(Stream& rng) const {
        Sample s;
        const int n_coords = coordinates();
        s.bits.resize(n_coords);
        s.lows.resize(n_coords);
        for (int j = 0; j < n_coords; ++j) {
            s.bits[j] = rng.bernoulli(0.5) ? 1 : 0;
            s.lows[j] = rng.u01();
        }
        return s;
    }

    // Bit at the block's level of coordinate j after adding g on the
    // odometer: bit(x+g) = bit(x) xor bit(r) xor carry, where r is the shift
    // residue mod 2^{b+1} and the carry event reads the uniform low-bits
    // variable. For b > 61 the shift cannot wrap and the residue algebra
    // collapses to a plain carry (g > 0) or borrow (g < 0).
    bool coordinate_bit(const Sample& s, int block, int j, long g) const {
        const int idx = offsets_[block - 1] + j;
        bool bit = s.bits[idx] != 0;
        if (g == 0) return bit;
        const int b = bit_level(block);
        if (b <= 61) {
            const long period = 1L << (b + 1);
            const long half = 1L << b;
            const long r = ((g % period) + period) % period;
            const bool shift_bit = (r & half) != 0;
            const long low = r & (half - 1);
            const bool carry =
                s.lows[idx] >= 1.0 - static_cast<double>(low) / static_cast<double>(half);
            return bit ^ shift_bit ^ carry;
        }
        if (g > 0) {
            const bool carry = s.lows[idx] >= 1.0 - static_cast<double>(g) * bit_scale_[block];
            return bit ^ carry;
        }
        const bool borrow = s.lows[idx] < static_cast<double>(-g) * bit_scale_[block];
        return bit ^ borrow;
    }

    bool in_block_set(const Sample& s, int block, long g) const {
        for (int j = 0; j < block; ++j) {
            if (coordinate_bit(s, block, j, g)) return false;
        }
        return true;
    }

    double f_squared(const Sample& s, long g) const {
        double v = 1.0;
        double w = 1.0;
        for (int n = 1; n <= levels_; ++n) {
            w *= 2.0;
            if (in_block_set(s, n, g)) v += w;
        }
        return v;
    }

    // C_N majorant for sup_{g^{-1} in K_N} |int log T_g' dmu|.
    static double cn_majorant(int n_cap) {
        double c = 0.0;
        for (int n = 1; n < n_cap; ++n) c += (n + 3.0) * std::pow(2.0, n + 1);
        for (int n = std::max(1, n_cap); n <= 40; ++n) {
            c += (n + 2.0) * std::pow(2.0, n + 1) * std::pow(2.0, -static_cast<double>(n) * n);
        }
        return c;
    }

    // Majorant for ||F^2 - F^2 o T_g||_1.
    static double f2_majorant(long g) {
        const int n_cap = std::max<long>(1, std::labs(g));
        double c = 0.0;
        for (int n = 1; n < n_cap; ++n) c += std::pow(2.0, n);
        for (int n = n_cap; n <= 40; ++n) {
            c += std::pow(2.0, n) * std::pow(2.0, -static_cast<double>(n) * n);
        }
        return c;
    }

    // Probability on Z concentrated enough at 0 that
    // kappa(K_{n-1}) > 1 - 1/(2^n C_n) with K_0 = {0}, K_n = [-n, n].
    static KappaMeasure paired_kappa(int n_max = 6) {
        std::vector<double> q(n_max + 2, 0.0);
        for (int n = 1; n <= n_max + 1; ++n) {
            q[n] = 1.0 / (std::pow(2.0, n + 1) * cn_majorant(n));
        }
        KappaMeasure kappa;
        kappa.symmetric = true;
        double mass0 = 1.0 - q[1] + q[n_max + 1];  // fold the tail back to 0
        kappa.atoms.push_back({0, mass0});
        for (int n = 1; n <= n_max; ++n) {
            const double w = 0.5 * (q[n] - q[n + 1]);
            kappa.atoms.push_back({n, w});
            kappa.atoms.push_back({-n, w});
        }
        kappa.validate();
        return kappa;
    }

    struct BlockProbRow {
        int n = 0;
        double empirical = 0.0;
        double target = 0.0;
        double z = 0.0;
        bool pass = false;
    };

    std::vector<BlockProbRow> block_prob_report(std::uint64_t trials,
                                                std::uint64_t master_seed) const {
        std::vector<std::uint64_t> hits(levels_ + 1, 0);
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(master_seed, t);
            const Sample s = draw(rng);
            for (int n = 1; n <= levels_; ++n) {
                if (in_block_set(s, n, 0)) ++hits[n];
            }
        }
        std::vector<BlockProbRow> rows;
        for (int n = 1; n <= levels_; ++n) {
            BlockProbRow row;
            row.n = n;
            row.target = std::pow(2.0, -n);
            row.empirical = static_cast<double>(hits[n]) / static_cast<double>(trials);
            const double se = std::sqrt(row.target * (1.0 - row.target) / static_cast<double>(trials));
            row.z = se > 0.0 ? (row.empirical - row.target) / se : 0.0;
            row.pass = std::abs(row.z) <= 4.0;
            rows.push_back(row);
        }
        return rows;
    }

    struct InvarianceRow {
        int n = 0;
        long g = 0;
        double empirical = 0.0;   // per-coordinate flip probability
        double bound = 0.0;       // 2^{-n^2}/n
        double se = 0.0;
        bool pass = false;        // empirical <= bound + 4 se
    };

    // Almost-invariance of the A_n family over the windows K_n = [-n, n];
    // this is the construction's acceptance precondition. One odometer
    // coordinate is drawn per trial and shared across the shifts of a level.
    std::vector<InvarianceRow> almost_invariance_report(std::uint64_t trials,
                                                        std::uint64_t master_seed) const {
        std::vector<InvarianceRow> rows;
        for (int n = 1; n <= levels_; ++n) {
            const int bit = bit_level(n);
            std::vector<std::uint64_t> flips(2 * n, 0);
            Sample one;
            one.bits.resize(static_cast<std::size_t>(offsets_.back()));
            one.lows.resize(static_cast<std::size_t>(offsets_.back()));
            const int idx = offsets_[n - 1];
            for (std::uint64_t t = 0; t < trials; ++t) {
                Stream rng(master_seed + static_cast<std::uint64_t>(n), t);
                one.bits[idx] = rng.bernoulli(0.5) ? 1 : 0;
                one.lows[idx] = rng.u01();
                const bool b0 = coordinate_bit(one, n, 0, 0);
                for (long g = 1; g <= n; ++g) {
                    if (coordinate_bit(one, n, 0, g) != b0) ++flips[2 * (g - 1)];
                    if (coordinate_bit(one, n, 0, -g) != b0) ++flips[2 * (g - 1) + 1];
                }
            }
            (void)bit;
            for (long g = 1; g <= n; ++g) {
                for (int side = 0; side < 2; ++side) {
                    InvarianceRow row;
                    row.n = n;
                    row.g = side == 0 ? g : -g;
                    row.bound = std::pow(2.0, -static_cast<double>(n) * n) / n;
                    row.empirical = static_cast<double>(flips[2 * (g - 1) + side]) /
                                    static_cast<double>(trials);
                    row.se = std::sqrt(std::max(row.empirical * (1.0 - row.empirical), 1.0e-12) /
                                       static_cast<double>(trials));
                    row.pass = row.empirical <= row.bound + 4.0 * row.se;
                    rows.push_back(row);
                }
            }
        }
        return rows;
    }

    struct IntegrabilityRow {
        long g = 0;
        double f2_defect = 0.0;        // MC of ||F^2 - F^2 o T_g||_1
        double f2_majorant = 0.0;
        double log_defect = 0.0;       // MC of int |log(F^2 o T_g / F^2)| F^2 dP
        double log_majorant = 0.0;     // C_N
        double se_f2 = 0.0;
        double se_log = 0.0;
        bool pass = false;
    };

    std::vector<IntegrabilityRow> integrability_report(long g_max, std::uint64_t trials,
                                                       std::uint64_t master_seed) const {
        std::vector<RunningMoments> f2_stat(g_max + 1), log_stat(g_max + 1);
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(master_seed, t);
            const Sample s = draw(rng);
            const double f2_0 = f_squared(s, 0);
            for (long g = 1; g <= g_max; ++g) {
                const double f2_g = f_squared(s, g);
                f2_stat[g].add(std::abs(f2_0 - f2_g));
                log_stat[g].add(f2_0 * std::abs(std::log(f2_g / f2_0)));
            }
        }
        std::vector<IntegrabilityRow> rows;
        for (long g = 1; g <= g_max; ++g) {
            IntegrabilityRow row;
            row.g = g;
            row.f2_defect = f2_stat[g].mean();
            row.se_f2 = f2_stat[g].se_mean();
            row.f2_majorant = f2_majorant(g);
            row.log_defect = log_stat[g].mean();
            row.se_log = log_stat[g].se_mean();
            row.log_majorant = cn_majorant(static_cast<int>(std::max<long>(1, g)));
            row.pass = row.f2_defect <= row.f2_majorant + 4.0 * row.se_f2 &&
                       row.log_defect <= row.log_majorant + 4.0 * row.se_log;
            rows.push_back(row);
        }
        return rows;
    }

    struct EntropyEstimate {
        double value = 0.0;
        double se = 0.0;
        std::vector<std::pair<long, double>> per_g;
        bool below_one = false;  // value <= 1 + 4 se
    };

    // h_kappa estimate: sum_g kappa(g) E_P[F^2 o T_g^{-1} - F^2 - F^2 log(F^2 o T_g^{-1}/F^2)].
    // The kappa-weighted combination is accumulated per trial so its standard
    // error comes from one iid statistic.
    EntropyEstimate entropy_estimate(const KappaMeasure& kappa, std::uint64_t trials,
                                     std::uint64_t master_seed) const {
        kappa.validate();
        EntropyEstimate est;
        RunningMoments combined;
        std::vector<RunningMoments> per_g(kappa.atoms.size());
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(master_seed, t);
            const Sample s = draw(rng);
            const double f2 = f_squared(s, 0);
            double h_sample = 0.0;
            for (std::size_t i = 0; i < kappa.atoms.size(); ++i) {
                const auto& [g, weight] = kappa.atoms[i];
                if (g == 0) continue;
                const double f2_inv = f_squared(s, -g);
                const double term = f2_inv - f2 - f2 * std::log(f2_inv / f2);
                per_g[i].add(term);
                h_sample += weight * term;
            }
            combined.add(h_sample);
        }
        for (std::size_t i = 0; i < kappa.atoms.size(); ++i) {
            est.per_g.push_back({kappa.atoms[i].first, per_g[i].count() ? per_g[i].mean() : 0.0});
        }
        est.value = combined.mean();
        est.se = combined.se_mean();
        est.below_one = est.value <= 1.0 + 4.0 * est.se;
        return est;
    }

private:
    int levels_;
    std::vector<int> offsets_;
    std::vector<double> bit_scale_;
};

// ---------------------------------------------------------------------------
// Bernoulli rare-symbol construction: independent levels k with symbol
// probability p_k = 4^{-k} k^{-2}, block variables
// Y_k = sum_{j<2^k} 2^k f_k o T^j and F = 1 + sum_k Y_k. The shifted block
// differences have closed-form variances, matched against Monte Carlo.
// ---------------------------------------------------------------------------
class BernoulliConstruction {
public:
    explicit BernoulliConstruction(int levels = 8, long max_shift = 64)
        : levels_(levels), max_shift_(max_shift) {
        if (levels_ < 1 || levels_ > 16) {
            throw std::invalid_argument("BernoulliConstruction: levels in [1, 16]");
        }
    }

    int levels() const { return levels_; }
    long max_shift() const { return max_shift_; }

    static double symbol_prob(int k) {
        return std::pow(4.0, -k) / (static_cast<double>(k) * k);
    }

    // ||Y_k - Y_k o T^n||_2^2: a sum of c iid centered differences with
    // c = 2^k when 2^k <= n (disjoint windows) and c = n otherwise
    // (telescoped), each of variance 2 * 4^k p_k (1 - p_k).
    static double norm2_yk(int k, long n) {
        if (n == 0) return 0.0;
        const double p = symbol_prob(k);
        const double c = (1L << k) <= std::labs(n) ? std::pow(2.0, k)
                                                   : static_cast<double>(std::labs(n));
        return c * std::pow(4.0, k) * 2.0 * p * (1.0 - p);
    }

    // Variance of the squared difference (Y_k - Y_k o T^n)^2, from the exact
    // second and fourth moments of the iid sum; used as the analytic standard
    // error so rare-event cells keep a meaningful z gate.
    static double var_of_sq(int k, long n) {
        if (n == 0) return 0.0;
        const double p = symbol_prob(k);
        const double q = 2.0 * p * (1.0 - p);  // P(single difference = +-1)
        const double c = (1L << k) <= std::labs(n) ? std::pow(2.0, k)
                                                   : static_cast<double>(std::labs(n));
        const double m2 = std::pow(4.0, k) * q;
        const double m4 = std::pow(16.0, k) * q;
        const double es2 = c * m2;
        const double es4 = c * m4 + 3.0 * c * (c - 1.0) * m2 * m2;
        return std::max(0.0, es4 - es2 * es2);
    }

    // Full series ||F - F o T^n||_2^2 with tail summed analytically.
    static double norm2_total(long n) {
        if (n == 0) return 0.0;
        const long an = std::labs(n);
        int m = 0;
        while ((2L << m) <= an) ++m;  // 2^m <= |n| < 2^{m+1}
        double acc = 0.0;
        for (int k = 1; k <= m; ++k) acc += norm2_yk(k, an);
        // 2n sum_{k>m} (1/k^2 - 4^{-k}/k^4)
        double corr = 0.0;
        for (int k = m + 1; k <= m + 60; ++k) {
            corr += std::pow(4.0, -k) / (std::pow(static_cast<double>(k), 4));
        }
        acc += 2.0 * static_cast<double>(an) * (tail_inv_square_sum(m) - corr);
        return acc;
    }

    // Expected truncation loss of F: sum_{k>K} E[Y_k] = sum_{k>K} 1/k^2.
    double truncation_tail() const { return tail_inv_square_sum(levels_); }

    struct NormRow {
        int k = 0;
        long n = 0;
        double empirical = 0.0;
        double target = 0.0;
        double se = 0.0;  // analytic
        double z = 0.0;
        bool pass = false;
    };

    std::vector<NormRow> norm_check(int k_max, const std::vector<long>& shifts,
                                    std::uint64_t trials, std::uint64_t master_seed) const {
        if (k_max > levels_) throw std::invalid_argument("norm_check: k_max above truncation");
        long widest = 0;
        for (long n : shifts) widest = std::max(widest, std::labs(n));
        std::vector<std::vector<RunningMoments>> stats(
            k_max + 1, std::vector<RunningMoments>(shifts.size()));
        for (std::uint64_t t = 0; t < trials; ++t) {
            Stream rng(master_seed, t);
            for (int k = 1; k <= k_max; ++k) {
                const std::uint32_t window = (1u << k) + static_cast<std::uint32_t>(widest);
                const auto hits = rng.bernoulli_hits(window, symbol_prob(k));
                const double y0 = count_in(hits, 0, 1L << k);
                for (std::size_t si = 0; si < shifts.size(); ++si) {
                    const long n = shifts[si];
                    const double yn = count_in(hits, n, n + (1L << k));
                    const double diff = std::pow(2.0, k) * (y0 - yn);
                    stats[k][si].add(diff * diff);
                }
            }
        }
        std::vector<NormRow> rows;
        for (int k = 1; k <= k_max; ++k) {
            for (std::size_t si = 0; si < shifts.size(); ++si) {
                NormRow row;
                row.k = k;
                row.n = shifts[si];
                row.empirical = stats[k][si].mean();
                row.target = norm2_yk(k, row.n);
                row.se = std::sqrt(var_of_sq(k, row.n) / static_cast<double>(trials));
                row.z = row.se > 0.0 ? (row.empirical - row.target) / row.se : 0.0;
                row.pass = std::abs(row.z) <= 4.0;
                rows.push_back(row);
            }
        }
        return rows;
    }

    // Partial sums of e^{-||F - F o T^n||^2/2}; the construction's total
    // dissipativity certificate.
    DissipativityReport dissipativity(long n_max = 64) const {
        return dissipativity_partial_sums([](long n) { return norm2_total(n); }, n_max, 1e-6);
    }

    // Best constant in ||F - F o T^n||^2 >= C |n| / log2(|n|)^2 over a range.
    static double lower_bound_constant(long n_max = 64) {
        double best = std::numeric_limits<double>::infinity();
        for (long n = 2; n <= n_max; ++n) {
            const double l = std::log2(static_cast<double>(n));
            best = std::min(best, norm2_total(n) * l * l / static_cast<double>(n));
        }
        return best;
    }

private:
    static double count_in(const std::vector<std::uint32_t>& hits, long lo, long hi) {
        double c = 0.0;
        for (std::uint32_t h : hits) {
            const long x = static_cast<long>(h);
            if (x >= lo && x < hi) c += 1.0;
        }
        return c;
    }

    int levels_;
    long max_shift_;
};

}  // namespace poissonlab
