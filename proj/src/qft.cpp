#include "paultrap/qft.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <numeric>
#include <random>

namespace paultrap::qft {

namespace {

int qubit_count(std::size_t dim) {
    if (dim < 2 || dim > 4096 || !std::has_single_bit(dim))
        throw ValidationError(fmt::format("state dimension {} is not 2^n with 1 <= n <= 12", dim));
    return std::countr_zero(dim);
}

double norm2(const std::vector<Complex>& a) {
    double s = 0.0;
    for (const auto& z : a) s += std::norm(z);
    return s;
}

}  // namespace

PureState::PureState(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)), n_(qubit_count(amps_.size())) {
    const double s = norm2(amps_);
    if (!(std::abs(s - 1.0) <= 1e-12)) throw ValidationError(fmt::format("state is not normalized (norm^2 = {})", s));
}

PureState PureState::normalized(std::vector<Complex> amplitudes) {
    qubit_count(amplitudes.size());
    const double s = std::sqrt(norm2(amplitudes));
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("state has zero or non-finite norm");
    for (auto& z : amplitudes) z /= s;
    // renormalize once more so rounding stays well inside the tolerance
    const double t = std::sqrt(norm2(amplitudes));
    for (auto& z : amplitudes) z /= t;
    return PureState(std::move(amplitudes));
}

Distribution::Distribution(std::vector<double> p) : p_(std::move(p)) {
    qubit_count(p_.size());
    double s = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0)) throw ValidationError("probabilities must be non-negative");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError(fmt::format("probabilities sum to {}", s));
}

StateKind parse_state_kind(const std::string& name) {
    if (name == "period1") return StateKind::Period1;
    if (name == "period2") return StateKind::Period2;
    if (name == "period3") return StateKind::Period3;
    if (name == "period4") return StateKind::Period4;
    if (name == "period8") return StateKind::Period8;
    if (name == "period3_phase") return StateKind::Period3Phase;
    throw ValidationError(fmt::format("unknown state kind '{}'", name));
}

PureState prepare(StateKind kind, double phi_r) {
    std::vector<Complex> a(8, 0.0);
    switch (kind) {
        case StateKind::Period1:
            std::fill(a.begin(), a.end(), 1.0);
            break;
        case StateKind::Period2:
            a[0b001] = a[0b011] = a[0b101] = a[0b111] = 1.0;
            break;
        case StateKind::Period3:
            a[0b001] = a[0b011] = a[0b100] = a[0b110] = 1.0;
            break;
        case StateKind::Period4:
            a[0b011] = a[0b111] = 1.0;
            break;
        case StateKind::Period8:
            a[0b111] = 1.0;
            break;
        case StateKind::Period3Phase: {
            const Complex ph = std::polar(1.0, phi_r);
            a[0b001] = a[0b100] = 1.0;
            a[0b011] = a[0b110] = ph;
            break;
        }
    }
    return PureState::normalized(std::move(a));
}

namespace {

std::vector<Complex> dft(const std::vector<Complex>& x, double sign) {
    const std::size_t n = x.size();
    std::vector<Complex> y(n, 0.0);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t jk = (j * k) % n;
            acc += x[k] * std::polar(1.0, sign * constants::two_pi * static_cast<double>(jk) / n);
        }
        y[j] = acc * norm;
    }
    return y;
}

}  // namespace

PureState coherent_qft(const PureState& s) { return PureState::normalized(dft(s.amplitudes(), +1.0)); }

PureState inverse_qft(const PureState& s) { return PureState::normalized(dft(s.amplitudes(), -1.0)); }

PureState qft_of_basis_state(int n, std::size_t k) {
    const std::size_t dim = std::size_t{1} << n;
    if (k >= dim) throw ValidationError("basis index out of range");
    // output qubit l carries |0> + exp(2 pi i k / 2^(n - l + 1)) |1>, qubit 1 most significant
    std::vector<Complex> amps(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    for (std::size_t j = 0; j < dim; ++j) {
        double phase = 0.0;
        for (int l = 1; l <= n; ++l) {
            const int bit = (j >> (n - l)) & 1;
            if (bit) phase += static_cast<double>(k % (std::size_t{1} << l)) / static_cast<double>(std::size_t{1} << l);
        }
        amps[j] *= std::polar(1.0, constants::two_pi * phase);
    }
    return PureState::normalized(std::move(amps));
}

Distribution born_probabilities(const PureState& s) {
    std::vector<double> p(s.dimension());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::norm(s[i]);
    for (auto& v : p) v /= total;
    return Distribution(std::move(p));
}

namespace {

struct Enumerator {
    int n;
    RotationConvention conv;
    std::vector<double>& out;

    // qubit i (1-based) is bit n - i of the index
    void run(std::vector<Complex> psi, int i, std::size_t record) {
        if (i > n) {
            out[record] += norm2(psi);
            return;
        }
        const std::size_t mask = std::size_t{1} << (n - i);
        double theta = 0.0;
        for (int prev = 1; prev < i; ++prev) {
            const int bit = (record >> (i - 1 - prev)) & 1;
            if (bit) theta += constants::pi / static_cast<double>(std::size_t{1} << (i - prev));
        }
        const Complex ph = std::polar(1.0, conv == RotationConvention::Standard ? theta : -theta);
        const double r = 1.0 / std::sqrt(2.0);
        for (std::size_t idx = 0; idx < psi.size(); ++idx) {
            if (idx & mask) continue;
            Complex a0 = psi[idx], a1 = psi[idx | mask] * ph;
            if (conv == RotationConvention::Conjugated) std::swap(a0, a1);
            psi[idx] = r * (a0 + a1);
            psi[idx | mask] = r * (a0 - a1);
        }
        for (int b = 0; b <= 1; ++b) {
            std::vector<Complex> branch = psi;
            for (std::size_t idx = 0; idx < branch.size(); ++idx)
                if (static_cast<bool>(idx & mask) != static_cast<bool>(b)) branch[idx] = 0.0;
            if (norm2(branch) == 0.0) continue;
            run(std::move(branch), i + 1, (record << 1) | static_cast<std::size_t>(b));
        }
    }
};

}  // namespace

Distribution semiclassical_record(const PureState& s, RotationConvention conv) {
    std::vector<double> p(s.dimension(), 0.0);
    Enumerator{s.qubits(), conv, p}.run(s.amplitudes(), 1, 0);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    return Distribution(std::move(p));
}

std::size_t bit_reverse(std::size_t v, int bits) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b) r |= ((v >> b) & 1) << (bits - 1 - b);
    return r;
}

Distribution bit_reversed(const Distribution& d) {
    const int n = qubit_count(d.size());
    std::vector<double> p(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) p[bit_reverse(i, n)] = d[i];
    return Distribution(std::move(p));
}

Distribution semiclassical_qft(const PureState& s, RotationConvention conv) {
    return bit_reversed(semiclassical_record(s, conv));
}

double sso(const Distribution& m, const Distribution& e) {
    if (m.size() != e.size()) throw ValidationError("distributions have different sizes");
    double s = 0.0, sm = 0.0, se = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        s += std::sqrt(m[i] * e[i]);
        sm += m[i];
        se += e[i];
    }
    return std::min(1.0, (s * s) / (sm * se));
}

Distribution depolarize(const Distribution& d, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("depolarizing probability must be in [0, 1]");
    std::vector<double> out(d.size());
    const double u = p / static_cast<double>(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = (1.0 - p) * d[i] + u;
    return Distribution(std::move(out));
}

Distribution sample(const Distribution& d, std::size_t shots, std::uint64_t seed) {
    if (shots == 0) throw ValidationError("shot count must be positive");
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(d.probabilities().begin(), d.probabilities().end());
    std::vector<double> counts(d.size(), 0.0);
    for (std::size_t i = 0; i < shots; ++i) counts[pick(rng)] += 1.0;
    for (auto& c : counts) c /= static_cast<double>(shots);
    return Distribution(std::move(counts));
}

std::vector<Distribution> phase_sweep(const std::vector<double>& phis) {
    std::vector<Distribution> out;
    out.reserve(phis.size());
    for (double phi : phis) out.push_back(semiclassical_qft(prepare(StateKind::Period3Phase, phi)));
    return out;
}

}  // namespace paultrap::qft
