#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace carleman {

using Vec2 = Eigen::Vector2d;

constexpr double kPi = 3.14159265358979323846;

// Tolerances used across modules. Values are fixed project-wide so that
// classification results are reproducible.
struct Tolerances {
    static constexpr double geom_rel = 1e-9;    // interface membership band, x domain diameter
    static constexpr double field = 1e-10;      // non-vanishing floor for |H|
    static constexpr double sign_rel = 1e-8;    // interface sign band, x sup|H|
    static constexpr double quadrature = 1e-6;  // relative, for built-in shapes
    static constexpr double unit = 1e-12;       // |v| = 1 slack
};

// A mathematical hypothesis of the estimate failed on the supplied data
// (Condition (A)/(B)/(C), the source-factor floor, a certification sweep).
class ConditionError : public std::runtime_error {
public:
    ConditionError(std::string condition, const std::string& what)
        : std::runtime_error("condition " + condition + " violated: " + what),
          condition_(std::move(condition)) {}
    const std::string& condition() const { return condition_; }

private:
    std::string condition_;
};

class VanishingFieldError : public std::runtime_error {
public:
    VanishingFieldError(const Vec2& where, double value)
        : std::runtime_error("field magnitude " + std::to_string(value) + " at (" +
                             std::to_string(where.x()) + ", " + std::to_string(where.y()) +
                             ") is below the non-vanishing floor"),
          where_(where), value_(value) {}
    Vec2 where() const { return where_; }
    double value() const { return value_; }

private:
    Vec2 where_;
    double value_;
};

class NoAssignmentError : public std::runtime_error {
public:
    explicit NoAssignmentError(const std::string& what)
        : std::runtime_error("no radius assignment exists: " + what) {}
};

class CertificationError : public std::runtime_error {
public:
    CertificationError(const std::string& what, const Vec2& witness)
        : std::runtime_error("certification failed: " + what + " at (" +
                             std::to_string(witness.x()) + ", " + std::to_string(witness.y()) + ")"),
          witness_(witness) {}
    Vec2 witness() const { return witness_; }

private:
    Vec2 witness_;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int step, const std::string& what)
        : std::runtime_error("solver diverged at step " + std::to_string(step) + ": " + what),
          step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// Fixed-format double for byte-stable CSV and report output.
inline std::string fmt(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    if (n < 1 || lo <= 0.0 || hi < lo) throw std::invalid_argument("logspace: bad range");
    std::vector<double> out(n);
    if (n == 1) { out[0] = lo; return out; }
    double llo = std::log(lo), lhi = std::log(hi);
    for (int k = 0; k < n; ++k) out[k] = std::exp(llo + (lhi - llo) * k / (n - 1));
    return out;
}

// Deterministic RNG wrapper: every randomized routine takes an explicit
// seed and owns its engine, so runs are reproducible member by member.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }
    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(engine_);
    }
    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace carleman
