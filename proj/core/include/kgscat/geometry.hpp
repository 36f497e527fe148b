#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "kgscat/decay.hpp"
#include "kgscat/jets.hpp"
#include "kgscat/powers.hpp"
#include "kgscat/timegrid.hpp"

namespace kgscat {

// Jet depth carried through the reduction; the Riccati iteration consumes one
// order per step, the residual one more.
inline constexpr int kJetDepth = 8;

// One multiplicative factor of a coefficient function f(t,x).
//
//   constant      : value
//   step          : s(t) = left + (right-left) * sigma(t), sigma the smooth
//                   0->1 switch (1 + t/<t>)/2; `power` != 0 selects the
//                   variant with tail exponent `power` instead of 2
//   exp_step      : exp(2 s(t)) with s as above (conformal factor)
//   cos_bump      : base + amplitude * g(t) * cos(2 pi mode x / L)
//   inverse_power : base + amplitude * <t>^{-delta}
//
// g(t) is the cos_bump time profile: static (1), step switch, or <t>^{-delta}.
struct TimeProfile {
  enum class Kind { static_one, step, inverse_power };
  Kind kind = Kind::static_one;
  double delta = 1.0;
  double left = 0.0, right = 1.0;  // step profile endpoints
};

struct CoeffFactor {
  enum class Family { constant, step, exp_step, cos_bump, inverse_power };
  Family family = Family::constant;
  double value = 1.0;
  double left = 0.0, right = 1.0;
  double power = 0.0;
  double base = 1.0;
  double amplitude = 0.0;
  int mode = 1;
  double delta = 1.0;
  TimeProfile profile;

  // f evaluated on a t-jet and an x-jet (x may itself depend on t, as along
  // the shift flow); dx variant evaluates the x-derivative of f.
  RJet eval_jet(const RJet& t, const RJet& x, double L) const;
  RJet eval_dx_jet(const RJet& t, const RJet& x, double L) const;
  RJet eval(const RJet& t, double x, double L) const;
  double limit(bool out, double x, double L) const;
  // decay rate of f - f_limit (infinity when t-independent)
  double decay_rate() const;
};

struct Coefficient {
  std::vector<CoeffFactor> factors;

  RJet eval_jet(const RJet& t, const RJet& x, double L) const;
  RJet eval_dx_jet(const RJet& t, const RJet& x, double L) const;
  RJet eval(const RJet& t, double x, double L) const;
  double limit(bool out, double x, double L) const;
  double decay_rate() const;
  bool time_independent() const;
  bool is_zero() const;
};

// Asymptotically static 1+1 metric data: lapse c, shift b, spatial metric h,
// potential V, with declared decay rates to the +/- infinity limits.
struct SpacetimeSpec {
  Coefficient c, b, h, V;
  double mu = 2.0;        // rate for c, h, V
  double mu_prime = 2.0;  // rate for b (> 1)
  std::string name = "scenario";

  static SpacetimeSpec from_coefficients(Coefficient c, Coefficient b, Coefficient h,
                                         Coefficient V);
};

// Flow of the shift vector field: y(t, x) with y(0,.) = id, plus the
// asymptotic diffeomorphisms obtained by extended integration + tail fit.
struct ShiftFlow {
  TimeGrid grid;
  bool trivial = true;           // b identically zero
  std::vector<RVec> y;           // lifted flow values at basis grid points
  RVec y_out, y_in;              // lifted asymptotic maps
};

ShiftFlow flow_of_shift(const SpacetimeSpec& spec, const TimeGrid& grid, const ModeBasis& basis);

// Strictly monotone degree-1 circle map inversion via the trigonometric
// interpolant of y(x) - x.
RVec invert_circle_map(const ModeBasis& basis, const RVec& y_samples);

// Reduced model data: a(t) = -Laplace(h-tilde) + V-tilde in the mode basis,
// r(t) the logarithmic time derivative of the volume density, weights, and
// asymptotic operators. Field samples are stored as jets in t; operator
// matrices are assembled on demand (grids can be long and fine).
class ModelCoefficients {
 public:
  ModeBasis basis;
  TimeGrid grid;

  // per node: jets of grid samples
  std::vector<std::array<RVec, kJetDepth + 1>> ghalf_inv;  // h-tilde^{-1/2}
  std::vector<std::array<RVec, kJetDepth + 1>> pot;        // V-tilde
  std::vector<std::array<RVec, kJetDepth + 1>> dens;       // |h-tilde|^{1/2}
  std::vector<std::array<RVec, kJetDepth + 1>> damp;       // r(t,x)

  RVec ghalf_inv_out, pot_out, dens_out;
  RVec ghalf_inv_in, pot_in, dens_in;
  Mat a_out, a_in;

  double mass_floor_sq = 0;
  double delta_rate = 0;  // min(mu, mu'-1)
  double mu = 0, mu_prime = 0;
  bool scalar_damping = true;  // r(t) x-independent on every node

  // a(t) assembled through the manifestly Hermitian form
  //   <u, a v>_w = int u' (h^{-1/2}) v' + int u (V w) v,   i.e.
  //   a = W^{-1} (D^dag M_g D + M_{Vw}),
  // which is W-self-adjoint by construction (a naive composition of
  // truncated multiplication operators loses band-edge paths and breaks the
  // weighted symmetry at the 1e-3 level). `order` selects exact time
  // derivatives of the family via the Leibniz recursion on W a = F.
  Mat a_at(int node, int order = 0) const;
  Vec r_samples_at(int node, int order = 0) const;
  Mat r_op_at(int node, int order = 0) const;
  const Weight& weight_at(int node) const;
  Weight weight_out() const;
  Weight weight_in() const;

  OpFamily a_family(int order = 0) const;
  OpFamily r_family(int order = 0) const;

 private:
  Mat form_at(int node, int order) const;
  mutable std::map<int, Weight> weight_cache_;
};

// standalone assembly of the model operator from field samples (used for the
// asymptotic operators and the separable-frame generator)
Mat assemble_model_op(const ModeBasis& basis, const RVec& ghalf_inv, const RVec& pot,
                      const RVec& dens, const Weight& W);

ModelCoefficients reduce_to_model(const SpacetimeSpec& spec, const ShiftFlow& flow,
                                  const ModeBasis& basis, const TimeGrid& grid);

// Largest m^2 with a_out, a_in >= m^2; throws positivity-violated otherwise.
double check_positivity(const ModelCoefficients& model);

struct TdReport {
  std::map<std::string, DecayFit> fits;  // "a_out", "a_in", "r"
  bool exact = false;                    // time-independent model
  bool a_rate_ok = false;
  bool r_rate_ok = false;
};

// Fits ||a(t) - a_out/in|| ~ <t>^{-delta_a} and ||r(t)|| ~ <t>^{-delta_r} and
// compares with the declared rates (slack 0.2).
TdReport verify_td_decay(const ModelCoefficients& model, double fit_t_lo = 5.0,
                         double fit_t_hi = 40.0, int max_samples = 48);

}  // namespace kgscat
