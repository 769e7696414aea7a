#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "energetics.hpp"

namespace qbn::fock {

using smat = Eigen::SparseMatrix<cplx>;

struct fock_config {
  std::vector<int> dims;  // truncation per mode, charger first
  long max_dim = 4096;
  double rtol = 1e-8;
  double atol = 1e-12;
  double tail_tol = 1e-8;

  static fock_config uniform(int modes, int d) {
    fock_config c;
    c.dims.assign(modes, d);
    return c;
  }

  long dimension() const {
    long D = 1;
    for (int d : dims) D *= d;
    return D;
  }
};

struct density_state {
  cmat rho;
  double time = 0.0;
};

namespace detail {

inline smat ladder(int d) {
  smat a(d, d);
  for (int k = 1; k < d; ++k) a.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
  a.makeCompressed();
  return a;
}

inline smat identity(long d) {
  smat I(d, d);
  I.setIdentity();
  return I;
}

inline smat embed(const std::vector<int>& dims, int m, const smat& op) {
  smat out = identity(1);
  for (int j = 0; j < static_cast<int>(dims.size()); ++j) {
    smat f = (j == m) ? op : identity(dims[j]);
    smat next = Eigen::kroneckerProduct(out, f);
    out = next;
  }
  out.makeCompressed();
  return out;
}

inline double frob(const cmat& x) { return x.norm(); }

inline cplx inner(const cmat& x, const cmat& y) {
  return (x.array().conjugate() * y.array()).sum();
}

// Y += α S X for column-major sparse S; Y's columns stay cache resident.
inline void add_left(cmat& Y, const smat& S, const cmat& X, cplx alpha) {
  const Eigen::Index n = X.cols();
  for (Eigen::Index j = 0; j < n; ++j) {
    cplx* y = Y.col(j).data();
    const cplx* x = X.col(j).data();
    for (Eigen::Index k = 0; k < S.outerSize(); ++k) {
      const cplx xk = alpha * x[k];
      if (xk == cplx(0.0)) continue;
      for (smat::InnerIterator it(S, k); it; ++it) y[it.row()] += it.value() * xk;
    }
  }
}

// Y += α X S, one column axpy per nonzero of S.
inline void add_right(cmat& Y, const cmat& X, const smat& S, cplx alpha) {
  for (Eigen::Index j = 0; j < S.outerSize(); ++j)
    for (smat::InnerIterator it(S, j); it; ++it) Y.col(j) += (alpha * it.value()) * X.col(it.row());
}

}  // namespace detail

// Single-mode Lindblad generator in row-major vec form: vec(A X B) = (A ⊗ B^T) vec(X).
inline smat single_mode_superop(int d, const std::vector<cplx>& coeffs, const Eigen::Matrix2cd& K) {
  const smat a = detail::ladder(d);
  const smat I = detail::identity(d);
  smat S(d * d, d * d);
  for (cplx c : coeffs) {
    const smat F1 = c * a;
    const smat F2 = smat(F1.adjoint());
    const smat F[2] = {F1, F2};
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        if (K(k, l) == cplx(0.0)) continue;
        const smat Fl_dag = smat(F[l].adjoint());
        const smat prod = Fl_dag * F[k];
        smat jump = Eigen::kroneckerProduct(F[k], smat(Fl_dag.transpose()));
        smat left = Eigen::kroneckerProduct(prod, I);
        smat right = Eigen::kroneckerProduct(I, smat(prod.transpose()));
        S += K(k, l) * (jump - 0.5 * left - 0.5 * right);
      }
  }
  S.prune(cplx(0.0));
  return S;
}

class lindblad_model {
 public:
  lindblad_model(const network_spec& spec, const reservoir_spec& bath, fock_config cfg)
      : spec_(spec), bath_(bath), cfg_(std::move(cfg)) {
    const int M = spec.modes();
    if (static_cast<int>(cfg_.dims.size()) != M)
      throw error(errc::dimension_mismatch, "one truncation per mode required");
    for (int d : cfg_.dims)
      if (d < 2) throw error(errc::invalid_argument, "truncation must be >= 2");
    double D = 1.0;
    for (int d : cfg_.dims) D *= d;
    if (D > static_cast<double>(cfg_.max_dim)) throw error(errc::dimension_overflow, "Hilbert space exceeds cap");
    dim_ = static_cast<long>(D);

    for (int m = 0; m < M; ++m) a_.push_back(detail::embed(cfg_.dims, m, detail::ladder(cfg_.dims[m])));

    const cplx I(0.0, 1.0);
    H_ = smat(dim_, dim_);
    const auto& c = spec.coupling();
    for (int i = 0; i < spec.topo().links(); ++i) {
      auto [u, d] = link_at(spec.topo(), i);
      const cplx ph = c.J[i] * std::exp(I * c.theta[i]);
      H_ += ph * smat(a_[u].adjoint() * a_[d]) + std::conj(ph) * smat(a_[d].adjoint() * a_[u]);
    }
    H_ += spec.epsilon() * (a_[0] + smat(a_[0].adjoint()));

    const Eigen::Matrix2cd K = bath.kossakowski();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ks(K);
    Heff_ = H_;
    for (const auto& ch : dissipation_channels(spec)) {
      smat o(dim_, dim_);
      for (auto [m, cm] : ch.terms) o += cm * a_[m];
      const smat F[2] = {o, smat(o.adjoint())};
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          if (K(k, l) != cplx(0.0)) Heff_ -= (0.5 * I * K(k, l)) * smat(smat(F[l].adjoint()) * F[k]);
      for (int s = 0; s < 2; ++s) {
        const double lam = ks.eigenvalues()(s);
        if (lam <= 1e-14 * K.norm()) continue;
        const Eigen::Vector2cd u = ks.eigenvectors().col(s);
        smat G = std::sqrt(lam) * (u(0) * F[0] + u(1) * F[1]);
        G.prune(cplx(0.0));
        jumps_.push_back(G);
        jumps_dag_.push_back(smat(G.adjoint()));
      }
    }
    Heff_.makeCompressed();
    Heff_dag_ = smat(Heff_.adjoint());
  }

  long dimension() const { return dim_; }
  const fock_config& config() const { return cfg_; }
  const network_spec& spec() const { return spec_; }
  const reservoir_spec& bath() const { return bath_; }
  const smat& annihilator(int m) const { return a_[m]; }
  const smat& hamiltonian() const { return H_; }

  // dρ/dt = −i H_eff ρ + i ρ H_eff† + Σ_s G_s ρ G_s†; linear in ρ, Hermitian or not.
  cmat rhs(const cmat& rho) const {
    const cplx I(0.0, 1.0);
    cmat out = cmat::Zero(dim_, dim_);
    detail::add_left(out, Heff_, rho, -I);
    detail::add_right(out, rho, Heff_dag_, I);
    cmat half(dim_, dim_);
    for (std::size_t s = 0; s < jumps_.size(); ++s) {
      half.setZero();
      detail::add_right(half, rho, jumps_dag_[s], 1.0);
      detail::add_left(out, jumps_[s], half, 1.0);
    }
    return out;
  }

  cmat ground() const {
    cmat rho = cmat::Zero(dim_, dim_);
    rho(0, 0) = 1.0;
    return rho;
  }

 private:
  network_spec spec_;
  reservoir_spec bath_;
  fock_config cfg_;
  long dim_ = 0;
  std::vector<smat> a_;
  smat H_, Heff_, Heff_dag_;
  std::vector<smat> jumps_, jumps_dag_;
};

// ---- observables -----------------------------------------------------------

inline cmat reduced(const cmat& rho, const std::vector<int>& dims, int m) {
  long stride = 1;
  for (int j = m + 1; j < static_cast<int>(dims.size()); ++j) stride *= dims[j];
  const int dm = dims[m];
  const long D = rho.rows();
  cmat out = cmat::Zero(dm, dm);
  // rows r = hi * dm * stride + k * stride + lo
  for (long hi = 0; hi < D / (dm * stride); ++hi)
    for (long lo = 0; lo < stride; ++lo) {
      const long base = hi * dm * stride + lo;
      for (int k = 0; k < dm; ++k)
        for (int l = 0; l < dm; ++l) out(k, l) += rho(base + k * stride, base + l * stride);
    }
  return out;
}

inline double occupation(const cmat& rho_m) {
  double n = 0.0;
  for (Eigen::Index k = 0; k < rho_m.rows(); ++k) n += k * rho_m(k, k).real();
  return n;
}

inline cplx amplitude(const cmat& rho_m) {
  cplx s = 0.0;
  for (Eigen::Index k = 1; k < rho_m.rows(); ++k) s += std::sqrt(static_cast<double>(k)) * rho_m(k, k - 1);
  return s;
}

inline double tail_population(const cmat& rho_m) {
  return rho_m(rho_m.rows() - 1, rho_m.cols() - 1).real();
}

// ℰ = ω⟨n⟩ − ω Σ_k r_k k with r_0 ≥ r_1 ≥ … the spectrum of ρ.
inline double spectral_ergotropy(const cmat& rho_m, double omega = 1.0, double tail_tol = 1e-8) {
  if (tail_population(rho_m) > tail_tol)
    throw error(errc::truncation_unsound, "top Fock level population exceeds tolerance");
  const cmat herm = (rho_m + rho_m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<cmat> es(herm, Eigen::EigenvaluesOnly);
  std::vector<double> r(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(r.begin(), r.end(), std::greater<>());
  double passive = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) passive += r[k] * static_cast<double>(k);
  return omega * (occupation(herm) - passive);
}

struct physicality {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  bool positive = true;
};

inline physicality check_physical(const cmat& rho, double positivity_slack = 1e-8) {
  physicality p;
  p.trace_error = std::abs(rho.trace() - cplx(1.0));
  p.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  cmat shifted = (rho + rho.adjoint()) / 2.0;
  shifted.diagonal().array() += positivity_slack;
  Eigen::LLT<cmat> llt(shifted);
  p.positive = llt.info() == Eigen::Success;
  return p;
}

inline void require_sound(const cmat& rho, const std::vector<int>& dims, double tail_tol) {
  for (int m = 0; m < static_cast<int>(dims.size()); ++m)
    if (tail_population(reduced(rho, dims, m)) > tail_tol)
      throw error(errc::truncation_unsound,
                  "mode " + std::to_string(m) + " top Fock level population exceeds tolerance");
}

inline energy_report report(const cmat& rho, const lindblad_model& model, double time) {
  energy_report r;
  r.engine = engine_kind::fock_oracle;
  r.time = time;
  const double omega = model.spec().omega();
  for (int m = 0; m < model.spec().modes(); ++m) {
    const cmat rm = reduced(rho, model.config().dims, m);
    r.energy.push_back(omega * occupation(rm));
    r.ergotropy.push_back(spectral_ergotropy(rm, omega, model.config().tail_tol));
    r.passive.push_back(r.energy.back() - r.ergotropy.back());
  }
  return r;
}

// ---- time integration ------------------------------------------------------

struct integration_stats {
  long steps = 0;
  long rejected = 0;
  long rhs_calls = 0;
};

// Adaptive Dormand-Prince 5(4). Every output state is checked for trace,
// Hermiticity, positivity and truncation soundness.
inline std::vector<density_state> evolve(const lindblad_model& model, const density_state& start,
                                         const std::vector<double>& t_grid, integration_stats* stats = nullptr) {
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if ((i == 0 && t_grid[0] < start.time) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
      throw error(errc::invalid_argument, "t_grid must be increasing and start at or after the state time");

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  const auto& cfg = model.config();
  integration_stats st;
  std::vector<density_state> out;
  cmat y = start.rho;
  double t = start.time;
  cmat k1 = model.rhs(y);
  ++st.rhs_calls;
  double h = 0.0;
  {
    const double ny = y.cwiseAbs().maxCoeff(), nf = k1.cwiseAbs().maxCoeff();
    h = (nf > 0.0) ? 0.01 * std::max(ny, 1e-6) / nf : 1.0;
  }

  for (double t_out : t_grid) {
    while (t < t_out) {
      const bool last = t + h >= t_out;
      const double step = last ? t_out - t : h;
      cmat k2 = model.rhs(y + step * (a21 * k1));
      cmat k3 = model.rhs(y + step * (a31 * k1 + a32 * k2));
      cmat k4 = model.rhs(y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      cmat k5 = model.rhs(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      cmat k6 = model.rhs(y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      cmat y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      cmat k7 = model.rhs(y5);
      st.rhs_calls += 6;
      cmat err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double scale_max = std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
      const double tol = cfg.atol + cfg.rtol * scale_max;
      const double en = err.cwiseAbs().maxCoeff() / tol;
      if (en <= 1.0) {
        t = last ? t_out : t + step;
        y = std::move(y5);
        k1 = std::move(k7);
        ++st.steps;
        if (!last || en > 0.0) h = step * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
        if (last) h = std::max(h, step);
      } else {
        ++st.rejected;
        h = step * std::max(0.2, 0.9 * std::pow(en, -0.2));
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw error(errc::not_converged, "step size underflow in Fock integrator");
    }
    const auto phys = check_physical(y, 1e-7);
    if (phys.trace_error > 1e-8 || phys.hermiticity_error > 1e-10 || !phys.positive)
      throw error(errc::not_converged, "Fock state lost physicality during integration");
    require_sound(y, cfg.dims, cfg.tail_tol);
    out.push_back({y, t});
  }
  if (stats) *stats = st;
  return out;
}

// ---- steady state ----------------------------------------------------------

// Inverse of the separable part of the generator: each mode's own damping
// (local channel plus its share of every collective channel), as a Kronecker
// sum of single-mode generators solved in their eigenbases.
class separable_preconditioner {
 public:
  separable_preconditioner(const network_spec& spec, const reservoir_spec& bath, const std::vector<int>& dims)
      : dims_(dims) {
    const int M = spec.modes();
    std::vector<std::vector<cplx>> coeffs(M);
    for (const auto& ch : dissipation_channels(spec))
      for (auto [m, c] : ch.terms) coeffs[m].push_back(c);
    // a mode with no damping of its own borrows the largest rate so the
    // preconditioner stays invertible; the outer solve is unaffected
    double max_rate = 0.0;
    for (const auto& cs : coeffs) {
      double r = 0.0;
      for (auto c : cs) r += std::norm(c);
      max_rate = std::max(max_rate, r);
    }
    if (max_rate == 0.0) throw error(errc::singular_drift, "no dissipation anywhere in the network");
    const Eigen::Matrix2cd K = bath.kossakowski();
    for (int m = 0; m < M; ++m) {
      if (coeffs[m].empty()) coeffs[m].push_back(std::sqrt(max_rate));
      modes_.push_back(build_mode(dims_[m], coeffs[m], K));
    }
    shift_ = 1e-9 * max_rate;

    rho0_ = cmat::Ones(1, 1);
    for (const auto& md : modes_) {
      cmat next = Eigen::kroneckerProduct(rho0_, md.null_state).eval();
      rho0_ = next;
    }
    build_denominators();
  }

  const cmat& reference() const { return rho0_; }

  // Solves S x + ρ_0 Tr x = y.
  cmat apply(const cmat& y) const {
    const cplx t = y.trace();
    cmat x = y - rho0_ * t;
    for (std::size_t m = 0; m < modes_.size(); ++m) transform(x, static_cast<int>(m), true);
    divide(x);
    for (std::size_t m = 0; m < modes_.size(); ++m) transform(x, static_cast<int>(m), false);
    x += (t - x.trace()) * rho0_;
    return x;
  }

 private:
  struct block {
    int off = 0, size = 0;  // contiguous slot range after reordering
    cmat V, Vinv;
  };

  struct mode_data {
    int d = 0;
    std::vector<block> blocks;
    std::vector<int> pos;   // (k, l) slot -> reordered position
    std::vector<cplx> eig;  // eigenvalue attached to each (k, l) slot
    cmat null_state;
  };

  static mode_data build_mode(int d, const std::vector<cplx>& coeffs, const Eigen::Matrix2cd& K) {
    const smat S = single_mode_superop(d, coeffs, K);
    const int n = d * d;
    // connected components of the coupling graph
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (int col = 0; col < S.outerSize(); ++col)
      for (smat::InnerIterator it(S, col); it; ++it) parent[find(static_cast<int>(it.row()))] = find(col);
    std::vector<std::vector<int>> comps;
    std::vector<int> comp_of(n, -1);
    for (int i = 0; i < n; ++i) {
      const int r = find(i);
      if (comp_of[r] < 0) {
        comp_of[r] = static_cast<int>(comps.size());
        comps.emplace_back();
      }
      comps[comp_of[r]].push_back(i);
    }
    const cmat Sd = cmat(S);
    mode_data md;
    md.d = d;
    md.eig.assign(n, cplx(0.0));
    md.pos.assign(n, 0);
    int off = 0;
    double best = std::numeric_limits<double>::infinity();
    for (auto& idx : comps) {
      const int s = static_cast<int>(idx.size());
      cmat B(s, s);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) B(i, j) = Sd(idx[i], idx[j]);
      Eigen::ComplexEigenSolver<cmat> es(B);
      block b;
      b.off = off;
      b.size = s;
      for (int i = 0; i < s; ++i) md.pos[idx[i]] = off + i;
      off += s;
      b.V = es.eigenvectors();
      b.Vinv = b.V.partialPivLu().inverse();
      for (int i = 0; i < s; ++i) {
        md.eig[idx[i]] = es.eigenvalues()(i);
        if (std::abs(es.eigenvalues()(i)) < best) {
          best = std::abs(es.eigenvalues()(i));
          md.null_state = cmat::Zero(d, d);
          for (int j = 0; j < s; ++j) md.null_state(idx[j] / d, idx[j] % d) = b.V(j, i);
        }
      }
      md.blocks.push_back(std::move(b));
    }
    md.null_state /= md.null_state.trace();
    md.null_state = (md.null_state + md.null_state.adjoint()).eval() / 2.0;
    // the null eigenvalue is zero by trace preservation; pin it exactly
    for (auto& e : md.eig)
      if (std::abs(e) == best) e = 0.0;
    return md;
  }

  long stride(int m) const {
    long s = 1;
    for (int j = m + 1; j < static_cast<int>(dims_.size()); ++j) s *= dims_[j];
    return s;
  }

  // Applies V^{-1} (forward) or V along the (k_m, l_m) index pair. The pair is
  // gathered into columns ordered by block so each block is one GEMM.
  void transform(cmat& x, int m, bool forward) const {
    const auto& md = modes_[m];
    const int d = md.d;
    const long st = stride(m);
    const long D = x.rows();
    const long outer = D / (d * st);
    const long rest = outer * st;
    cmat Y(rest * rest, d * d);
    auto sweep = [&](auto&& fn) {
      for (long ch = 0; ch < outer; ++ch)
        for (int l = 0; l < d; ++l)
          for (long cl = 0; cl < st; ++cl) {
            const long c = (ch * d + l) * st + cl;
            const long base = (ch * st + cl) * rest;
            for (long rh = 0; rh < outer; ++rh)
              for (int k = 0; k < d; ++k) {
                cplx* xs = &x((rh * d + k) * st, c);
                cplx* ys = &Y(base + rh * st, md.pos[k * d + l]);
                for (long rl = 0; rl < st; ++rl) fn(xs[rl], ys[rl]);
              }
          }
    };
    sweep([](const cplx& src, cplx& dst) { dst = src; });
    for (const auto& b : md.blocks) {
      const cmat& W = forward ? b.Vinv : b.V;
      auto seg = Y.middleCols(b.off, b.size);
      const cmat t = seg * W.transpose();
      seg = t;
    }
    sweep([](cplx& dst, const cplx& src) { dst = src; });
  }

  void build_denominators() {
    const long D = rho0_.rows();
    const int M = static_cast<int>(modes_.size());
    std::vector<long> st(M);
    for (int m = 0; m < M; ++m) st[m] = stride(m);
    inv_lambda_.resize(D, D);
    for (long c = 0; c < D; ++c)
      for (long r = 0; r < D; ++r) {
        cplx lam = shift_;
        for (int m = 0; m < M; ++m) {
          const int d = modes_[m].d;
          const int k = static_cast<int>((r / st[m]) % d), l = static_cast<int>((c / st[m]) % d);
          lam += modes_[m].eig[k * d + l];
        }
        inv_lambda_(r, c) = 1.0 / lam;
      }
  }

  void divide(cmat& x) const { x.array() *= inv_lambda_.array(); }

  std::vector<int> dims_;
  std::vector<mode_data> modes_;
  cmat rho0_;
  cmat inv_lambda_;
  double shift_ = 0.0;
};

struct steady_options {
  int restart = 30;
  int max_iterations = 600;
  double tol = 1e-11;
  double krylov_bytes = 1.0e9;  // cap on the stored Krylov basis
};

struct steady_stats {
  int iterations = 0;
  double residual = 0.0;  // ‖L ρ‖_F / ‖ρ‖_F after normalisation
};

// Null space of the generator by right-preconditioned restarted GMRES on
// L x + ρ_0 Tr x = ρ_0, whose unique solution is the unit-trace steady state.
inline cmat steady_state(const lindblad_model& model, const steady_options& opt = {}, steady_stats* stats = nullptr) {
  const separable_preconditioner P(model.spec(), model.bath(), model.config().dims);
  const cmat& r0 = P.reference();
  auto op = [&](const cmat& y) {
    cmat x = P.apply(y);
    cmat out = model.rhs(x);
    out += r0 * x.trace();
    return out;
  };

  const double bnorm = detail::frob(r0);
  cmat y = r0;  // P(ρ_0) = ρ_0, so the start guess is x = ρ_0
  int total = 0;
  double rel = 1.0;
  // the Krylov basis is the memory hog; shorten restarts for large spaces
  const double bytes = 16.0 * model.dimension() * model.dimension();
  const int m = std::max(8, std::min(opt.restart, static_cast<int>(opt.krylov_bytes / bytes) - 1));
  while (total < opt.max_iterations) {
    cmat r = r0 - op(y);
    double beta = detail::frob(r);
    rel = beta / bnorm;
    if (rel <= opt.tol) break;
    std::vector<cmat> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    cmat H = cmat::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    cvec g = cvec::Zero(m + 1);
    g(0) = beta;
    int j = 0;
    for (; j < m && total < opt.max_iterations; ++j, ++total) {
      cmat w = op(V[j]);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = detail::inner(V[i], w);
        w -= H(i, j) * V[i];
      }
      H(j + 1, j) = detail::frob(w);
      for (int i = 0; i < j; ++i) {
        const cplx tmp = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = tmp;
      }
      const double den = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
      cs[j] = H(j, j) / den;
      sn[j] = H(j + 1, j) / den;
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn[j] * g(j);
      g(j) = std::conj(cs[j]) * g(j);
      rel = std::abs(g(j + 1)) / bnorm;
      const double hn = std::abs(g(j + 1));
      if (rel <= opt.tol || hn == 0.0) {
        ++j;
        ++total;
        break;
      }
      V.push_back(w / detail::frob(w));
    }
    const int k = j;
    cvec z = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) y += z(i) * V[i];
    if (rel <= opt.tol) {
      cmat rr = r0 - op(y);
      rel = detail::frob(rr) / bnorm;
      if (rel <= 10 * opt.tol) break;
    }
  }
  if (rel > 10 * opt.tol)
    throw error(errc::not_converged, "steady-state GMRES did not converge (residual " + std::to_string(rel) + ")");

  cmat rho = P.apply(y);
  rho = (rho + rho.adjoint()).eval() / 2.0;
  rho /= rho.trace();
  if (stats) {
    stats->iterations = total;
    stats->residual = detail::frob(model.rhs(rho)) / detail::frob(rho);
  }
  const auto phys = check_physical(rho, 1e-8);
  if (!phys.positive) throw error(errc::not_converged, "steady state is not positive semidefinite");
  require_sound(rho, model.config().dims, model.config().tail_tol);
  return rho;
}

// Long-time integration alternative: integrate in chunks until the state
// stops changing.
inline cmat steady_state_by_integration(const lindblad_model& model, double chunk, double change_tol = 1e-10,
                                        double horizon = 1e7) {
  density_state s{model.ground(), 0.0};
  while (s.time < horizon) {
    auto next = evolve(model, s, {s.time + chunk}).back();
    const double change = (next.rho - s.rho).cwiseAbs().maxCoeff();
    s = std::move(next);
    if (change <= change_tol) return s.rho;
  }
  throw error(errc::not_converged, "long-time integration did not settle");
}

// ---- single-mode reference states ----------------------------------------

// D(α) S(ξ) ρ_th S(ξ)† D(α)† with ξ = r e^{iφ}, built by matrix exponentials
// in a work space of size d_work and cut to d levels.
inline cmat single_mode_state(double n_th, double r, double phi, cplx alpha, int d, int d_work = 160) {
  const cmat a = cmat(detail::ladder(d_work));
  const cmat ad = a.adjoint();
  cmat rho = cmat::Zero(d_work, d_work);
  for (int k = 0; k < d_work; ++k) rho(k, k) = std::pow(n_th / (n_th + 1.0), k) / (n_th + 1.0);
  const cplx xi = std::polar(r, phi);
  const cmat S = (0.5 * (std::conj(xi) * (a * a) - xi * (ad * ad))).exp();
  const cmat Dp = (alpha * ad - std::conj(alpha) * a).exp();
  const cmat U = Dp * S;
  cmat full = U * rho * U.adjoint();
  return full.topLeftCorner(d, d);
}

// Smallest truncation whose discarded populations of the single-mode Gaussian
// state with covariance sigma (vacuum = I/2) and amplitude alpha stay below tol.
inline int truncation_for(const Eigen::Matrix2d& sigma, cplx alpha, double tol = 1e-8, int floor = 4,
                          int d_work = 160) {
  const double nu = 2.0 * std::sqrt(std::max(sigma.determinant(), 0.25));
  const double n_th = std::max(0.0, (nu - 1.0) / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma);
  const double r = 0.25 * std::log(es.eigenvalues()(1) / es.eigenvalues()(0));
  // <Δa²> = −(2n+1) e^{iφ} sinh r cosh r
  const cplx da2 = cplx(sigma(0, 0) - sigma(1, 1), 2.0 * sigma(0, 1)) / 2.0;
  const double phi = std::arg(da2) + std::numbers::pi;
  const cmat rho = single_mode_state(n_th, r, phi, alpha, d_work, d_work);
  double tail = 0.0;
  int d = d_work;
  for (int k = d_work - 1; k >= 0; --k) {
    tail += std::max(0.0, rho(k, k).real());
    if (tail > tol) break;
    d = k;
  }
  return std::max(floor, d + 1);
}

// Smallest per-mode truncation for which a geometric tail with the given
// occupation falls below tol (used as a starting guess only).
inline int truncation_guess(double occupation, double tol = 1e-9, int floor = 4) {
  if (occupation <= 0.0) return floor;
  const double q = occupation / (occupation + 1.0);
  const double levels = std::log(tol * (occupation + 1.0)) / std::log(q);
  return std::max(floor, static_cast<int>(std::ceil(levels)) + 2);
}

}  // namespace qbn::fock
