#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "paultrap/core.hpp"

namespace paultrap::qft {

using Complex = std::complex<double>;

/// Normalized n-qubit state; index bit n-1 is qubit 1 (most significant, leftmost).
class PureState {
public:
    /// Amplitudes must have power-of-two length 2..4096 and unit norm within 1e-12.
    explicit PureState(std::vector<Complex> amplitudes);
    /// Normalizes the given amplitudes first.
    static PureState normalized(std::vector<Complex> amplitudes);

    int qubits() const noexcept { return n_; }
    std::size_t dimension() const noexcept { return amps_.size(); }
    const std::vector<Complex>& amplitudes() const noexcept { return amps_; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

private:
    std::vector<Complex> amps_;
    int n_;
};

/// Probabilities over 2^n outcomes, indexed like PureState.
class Distribution {
public:
    explicit Distribution(std::vector<double> p);

    std::size_t size() const noexcept { return p_.size(); }
    const std::vector<double>& probabilities() const noexcept { return p_; }
    double operator[](std::size_t i) const { return p_[i]; }

private:
    std::vector<double> p_;
};

enum class StateKind { Period1, Period2, Period3, Period4, Period8, Period3Phase };

StateKind parse_state_kind(const std::string& name);

/// Three-qubit periodic test states; `phi_r` is used only by Period3Phase.
PureState prepare(StateKind kind, double phi_r = 0.0);

/// |k> -> N^-1/2 sum_j exp(+2 pi i j k / N) |j>.
PureState coherent_qft(const PureState& state);
PureState inverse_qft(const PureState& state);

/// Product-form evaluation of the QFT of a basis state |k>, used as a cross-check.
PureState qft_of_basis_state(int n_qubits, std::size_t k);

Distribution born_probabilities(const PureState& state);

enum class RotationConvention {
    Standard,   // phase exp(+i theta) on |1>, then H
    Conjugated  // phase exp(-i theta) on |1>, then H X
};

/// Exact distribution of the raw measurement record m1 m2 ... mn (m1 most significant) of the
/// measured QFT, enumerating every branch.
Distribution semiclassical_record(const PureState& state, RotationConvention conv = RotationConvention::Standard);

/// Measured QFT read out in reverse order, indexed by the Fourier index j.
Distribution semiclassical_qft(const PureState& state, RotationConvention conv = RotationConvention::Standard);

std::size_t bit_reverse(std::size_t value, int bits);
Distribution bit_reversed(const Distribution& d);

/// (sum_j sqrt(m_j e_j))^2, normalized by the totals of both distributions.
double sso(const Distribution& measured, const Distribution& expected);

/// (1 - p) P + p / N.
Distribution depolarize(const Distribution& d, double p);

/// Empirical frequencies from `shots` draws with a seeded generator.
Distribution sample(const Distribution& d, std::size_t shots, std::uint64_t seed);

/// Semiclassical QFT of period3_phase(phi) for each phi.
std::vector<Distribution> phase_sweep(const std::vector<double>& phis);

}  // namespace paultrap::qft
