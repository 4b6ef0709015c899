#include "memsync/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace memsync {

namespace {

bool finite_all(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_length(const std::string& field, std::size_t got, std::size_t m) {
    if (got != m) {
        throw ValidationError(field, "expected " + std::to_string(m) + " entries (m = " +
                                         std::to_string(m) + "), got " + std::to_string(got));
    }
}

void check_vector(const std::string& field, std::span<const double> v, std::size_t m) {
    check_length(field, v.size(), m);
    if (!finite_all(v)) throw ValidationError(field, "entries must be finite");
}

void check_positive(const std::string& field, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) {
            throw ValidationError(field + "[" + std::to_string(i) + "]", "must be > 0");
        }
    }
}

void check_matrix(const std::string& field, const SquareMatrix& M, std::size_t m) {
    if (M.size() != m) {
        throw ValidationError(field, "expected a " + std::to_string(m) + "x" + std::to_string(m) +
                                         " matrix, got " + std::to_string(M.size()) + "x" +
                                         std::to_string(M.size()));
    }
    if (!finite_all(M.data())) throw ValidationError(field, "entries must be finite");
}

void check_activations(const std::vector<ActivationSpec>& acts, std::size_t m) {
    check_length("activations", acts.size(), m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(acts[i].beta > 0.0) || !std::isfinite(acts[i].beta)) {
            throw ValidationError("activations[" + std::to_string(i) + "].beta",
                                  "must be a finite positive bound");
        }
    }
}

void check_common(std::size_t m, std::span<const double> a, double b, std::span<const double> eta,
                  std::span<const double> J, std::span<const double> gamma, double P) {
    if (m < 2) throw ValidationError("m", "network needs at least 2 nodes");
    check_vector("a", a, m);
    check_positive("a", a);
    check_vector("eta", eta, m);
    check_positive("eta", eta);
    check_vector("J", J, m);
    check_vector("gamma", gamma, m);
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("b", "must be > 0");
    if (!(P >= 0.0) || !std::isfinite(P)) throw ValidationError("P", "must be >= 0");
}

// sum_j (u_i - u_j), exactly zero when all u_j are equal
double diffusive_sum(std::span<const double> u, std::size_t i) {
    double s = 0.0;
    for (double uj : u) s += u[i] - uj;
    return s;
}

}  // namespace

double ActivationSpec::operator()(double s) const {
    switch (kind) {
        case ActivationKind::TanhScaled:
            return beta * std::tanh(s);
        case ActivationKind::LogisticCentered:
            // 2/(1+e^{-s}) - 1 == tanh(s/2)
            return beta * std::tanh(0.5 * s);
        case ActivationKind::SineClamped:
            return beta * std::sin(s);
    }
    return 0.0;
}

double sigmoid_gamma(double s, double r, double V) {
    const double z = r * (s - V);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double window_eval(WindowKind kind, double rho, double eta) {
    switch (kind) {
        case WindowKind::Quadratic:
            return 1.0 - eta * rho * rho;
        case WindowKind::StrukovWilliams:
            return rho * (eta - rho);
    }
    return 0.0;
}

double NetworkState::norm_sq() const {
    double s = rho * rho;
    for (double x : u) s += x * x;
    return s;
}

std::size_t NetworkState::flat_size() const {
    return u.size() + 1 + (weights ? weights->size() * weights->size() : 0);
}

std::vector<double> NetworkState::to_flat() const {
    std::vector<double> y;
    y.reserve(flat_size());
    y.insert(y.end(), u.begin(), u.end());
    y.push_back(rho);
    if (weights) y.insert(y.end(), weights->data().begin(), weights->data().end());
    return y;
}

NetworkState NetworkState::from_flat(std::span<const double> y, std::size_t m, bool has_weights) {
    const std::size_t expected = m + 1 + (has_weights ? m * m : 0);
    if (y.size() != expected) {
        throw ValidationError("state", "flat state has " + std::to_string(y.size()) +
                                           " entries, expected " + std::to_string(expected));
    }
    NetworkState s;
    s.u.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(m));
    s.rho = y[m];
    if (has_weights) {
        SquareMatrix W(m);
        std::copy(y.begin() + static_cast<std::ptrdiff_t>(m + 1), y.end(), W.data().begin());
        s.weights = std::move(W);
    }
    return s;
}

void validate(const MhnnParams& p) {
    check_common(p.m, p.a, p.b, p.eta, p.J, p.gamma, p.P);
    check_matrix("w", p.w, p.m);
    check_activations(p.activations, p.m);
    if (!(p.k > 0.0) || !std::isfinite(p.k)) throw ValidationError("k", "must be > 0");
    if (!(p.r > 0.0) || !std::isfinite(p.r)) throw ValidationError("r", "must be > 0");
    if (!std::isfinite(p.V)) throw ValidationError("V", "must be finite");
    const double a_min = *std::min_element(p.a.begin(), p.a.end());
    if (!(a_min > p.k)) {
        std::ostringstream os;
        os << "Assumption a_i > k violated (min a_i = " << a_min << ", k = " << p.k << ")";
        throw ValidationError("k", os.str());
    }
}

void validate(const HebbianParams& p) {
    check_common(p.m, p.a, p.b, p.eta, p.J, p.gamma, p.P);
    check_vector("k", p.k, p.m);
    check_positive("k", p.k);
    check_activations(p.activations, p.m);
    check_matrix("c", p.c, p.m);
    check_matrix("lambda", p.lambda, p.m);
    check_matrix("w0", p.w0, p.m);
    for (std::size_t i = 0; i < p.m; ++i) {
        for (std::size_t j = 0; j < p.m; ++j) {
            const std::string idx = "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            if (!(p.c(i, j) > 0.0)) throw ValidationError("c" + idx, "must be > 0");
            if (p.w0(i, j) != 0.0 && p.w0(i, j) != 1.0) {
                throw ValidationError("w0" + idx, "initial weights must be 0 or 1");
            }
        }
    }
    const double a_min = *std::min_element(p.a.begin(), p.a.end());
    const double k_max = *std::max_element(p.k.begin(), p.k.end());
    const double eta_min = *std::min_element(p.eta.begin(), p.eta.end());
    const double bound = 0.5 * k_max * std::max(eta_min, eta_min * eta_min);
    if (!(a_min > bound)) {
        std::ostringstream os;
        os << "Assumption a > k*eta^2/2 violated (min a_i = " << a_min
           << ", k_max*max(eta_min, eta_min^2)/2 = " << bound << ")";
        throw ValidationError("a", os.str());
    }
}

void validate(const ModelParams& p) {
    std::visit([](const auto& q) { validate(q); }, p);
}

std::size_t node_count(const ModelParams& p) {
    return std::visit([](const auto& q) { return q.m; }, p);
}

double coupling_strength(const ModelParams& p) {
    return std::visit([](const auto& q) { return q.P; }, p);
}

void set_coupling_strength(ModelParams& p, double P) {
    std::visit([P](auto& q) { q.P = P; }, p);
}

bool is_hebbian(const ModelParams& p) { return std::holds_alternative<HebbianParams>(p); }

void mhnn_rhs_into(const MhnnParams& p, std::span<const double> y, std::span<double> dydt,
                   std::span<double> scratch) {
    const std::size_t m = p.m;
    const std::span<const double> u = y.first(m);
    const double rho = y[m];
    std::span<double> f = scratch.first(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = p.activations[j](u[j]);

    double gamma_sum = 0.0;
    if (p.coupling == CouplingKind::WeakSigmoidal) {
        for (std::size_t j = 0; j < m; ++j) gamma_sum += sigmoid_gamma(u[j], p.r, p.V);
    }

    double drho = -p.b * rho;
    for (std::size_t i = 0; i < m; ++i) {
        double syn = 0.0;
        for (std::size_t j = 0; j < m; ++j) syn += p.w(i, j) * f[j];
        const double coupling = p.coupling == CouplingKind::WeakSigmoidal
                                    ? p.P * u[i] * gamma_sum
                                    : p.P * diffusive_sum(u, i);
        dydt[i] = -p.a[i] * u[i] + syn +
                  p.k * window_eval(WindowKind::Quadratic, rho, p.eta[i]) * u[i] + p.J[i] -
                  coupling;
        drho += p.gamma[i] * u[i];
    }
    dydt[m] = drho;
}

void hebbian_rhs_into(const HebbianParams& p, std::span<const double> y, std::span<double> dydt,
                      std::span<double> scratch) {
    const std::size_t m = p.m;
    const std::span<const double> u = y.first(m);
    const double rho = y[m];
    const std::span<const double> W = y.subspan(m + 1, m * m);
    std::span<double> f = scratch.first(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = p.activations[j](u[j]);

    double drho = -p.b * rho;
    for (std::size_t i = 0; i < m; ++i) {
        double syn = 0.0;
        for (std::size_t j = 0; j < m; ++j) syn += W[i * m + j] * f[j];
        dydt[i] = -p.a[i] * u[i] + syn +
                  p.k[i] * window_eval(WindowKind::StrukovWilliams, rho, p.eta[i]) * u[i] +
                  p.J[i] - p.P * diffusive_sum(u, i);
        drho += p.gamma[i] * u[i];
        for (std::size_t j = 0; j < m; ++j) {
            dydt[m + 1 + i * m + j] = -p.c(i, j) * W[i * m + j] + p.lambda(i, j) * f[i] * f[j];
        }
    }
    dydt[m] = drho;
}

NetworkState mhnn_rhs(const MhnnParams& p, const NetworkState& s) {
    if (s.u.size() != p.m) {
        throw ValidationError("state.u", "dimension " + std::to_string(s.u.size()) +
                                             " does not match m = " + std::to_string(p.m));
    }
    if (s.weights) throw ValidationError("state.weights", "mHNN state carries no weights");
    const std::vector<double> y = s.to_flat();
    std::vector<double> dy(y.size());
    std::vector<double> scratch(p.m);
    mhnn_rhs_into(p, y, dy, scratch);
    return NetworkState::from_flat(dy, p.m, false);
}

NetworkState hebbian_rhs(const HebbianParams& p, const NetworkState& s) {
    if (s.u.size() != p.m) {
        throw ValidationError("state.u", "dimension " + std::to_string(s.u.size()) +
                                             " does not match m = " + std::to_string(p.m));
    }
    if (!s.weights) throw ValidationError("state.weights", "Hebbian state needs a weight matrix");
    if (s.weights->size() != p.m) {
        throw ValidationError("state.weights", "weight matrix must be m x m");
    }
    const std::vector<double> y = s.to_flat();
    std::vector<double> dy(y.size());
    std::vector<double> scratch(p.m);
    hebbian_rhs_into(p, y, dy, scratch);
    return NetworkState::from_flat(dy, p.m, true);
}

VectorField make_vector_field(const ModelParams& p) {
    return std::visit(
        [](const auto& q) -> VectorField {
            using T = std::decay_t<decltype(q)>;
            return [q, scratch = std::vector<double>(q.m)](std::span<const double> y,
                                                           std::span<double> dy) mutable {
                if constexpr (std::is_same_v<T, MhnnParams>) {
                    mhnn_rhs_into(q, y, dy, scratch);
                } else {
                    hebbian_rhs_into(q, y, dy, scratch);
                }
            };
        },
        p);
}

namespace {

class Fnv1a {
public:
    void add(double x) {
        // +0.0 and -0.0 hash alike
        if (x == 0.0) x = 0.0;
        add_u64(std::bit_cast<std::uint64_t>(x));
    }
    void add_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xffu;
            h_ *= 0x100000001b3ULL;
        }
    }
    void add(std::span<const double> v) {
        add_u64(v.size());
        for (double x : v) add(x);
    }
    void add(const std::vector<ActivationSpec>& acts) {
        for (const auto& f : acts) {
            add_u64(static_cast<std::uint64_t>(f.kind));
            add(f.beta);
        }
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string params_digest(const ModelParams& p) {
    Fnv1a h;
    std::visit(
        [&h](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            h.add_u64(q.m);
            h.add(q.a);
            h.add(q.b);
            h.add(q.eta);
            h.add(q.J);
            h.add(q.gamma);
            h.add(q.P);
            h.add(q.activations);
            if constexpr (std::is_same_v<T, MhnnParams>) {
                h.add_u64(0x6d686e6eULL);
                h.add(q.k);
                h.add(q.w.data());
                h.add(q.r);
                h.add(q.V);
                h.add_u64(static_cast<std::uint64_t>(q.coupling));
            } else {
                h.add_u64(0x68656262ULL);
                h.add(q.k);
                h.add(q.c.data());
                h.add(q.lambda.data());
                h.add(q.w0.data());
            }
        },
        p);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
    return buf;
}

std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::TanhScaled: return "tanh-scaled";
        case ActivationKind::LogisticCentered: return "logistic-centered";
        case ActivationKind::SineClamped: return "sine-clamped";
    }
    return "unknown";
}

ActivationKind activation_kind_from_string(const std::string& name) {
    if (name == "tanh-scaled") return ActivationKind::TanhScaled;
    if (name == "logistic-centered") return ActivationKind::LogisticCentered;
    if (name == "sine-clamped") return ActivationKind::SineClamped;
    throw ValidationError("activations.kind",
                          "unknown activation '" + name +
                              "' (expected tanh-scaled, logistic-centered or sine-clamped)");
}

std::string to_string(CouplingKind kind) {
    return kind == CouplingKind::WeakSigmoidal ? "weak" : "linear";
}

}  // namespace memsync
