#pragma once

#include <map>
#include <string>
#include <vector>

#include "mwlab/operators.hpp"
#include "mwlab/sparse.hpp"
#include "mwlab/weights.hpp"

namespace mwlab {

// tau_d = tau_n = 2^{d+11}: the paper uses both symbols without defining
// them; unifying with the reverse Holder constant keeps every exponent
// formula consistent. Flagged in every report.
inline double tau_dimensional(int d) { return std::ldexp(1.0, d + 11); }

struct CertificateReport {
    std::string theorem_id;
    std::string weight_kind;
    std::map<std::string, double> weight_constants;
    std::map<std::string, double> exponents;
    double constant_expression = 0.0;
    double empirical = 0.0;
    double ratio = 0.0;       // empirical / constant_expression
    double pass_bound = 0.0;  // 10 x the W = I calibration ratio, when set
    std::string status;       // "pass" | "fail" | "raw" | "inconclusive"
    std::string provenance = "tau_d=2^(d+11); calibration-normalized pass bounds";
    std::map<std::string, double> extras;
};

// minimal operator spec for experiments (config External Interfaces)
struct TSpec {
    KernelKind kind = KernelKind::Hilbert;
    int omega_bins = 16;
    std::uint64_t omega_seed = 1;
    bool enforce_mean_zero = true;
    double r = 2.0;      // T is L^{r'}-Hormander with this r
    int k_max = 6;
};

KernelOperator make_operator(const TSpec& ts, const GridGeometry& g);
double omega_sup_norm(const KernelOperator& t);

// deterministic vector-valued trial input #k
GridFunction vector_trial(const GridGeometry& g, int n, std::uint64_t seed, int k);

// sampling density used for every A_infty^sc evaluation in certificates
inline int ainfty_directions(int n) { return std::max(64, 16 * n); }

// ----- exponent certificates ------------------------------------------------

// kind: rough-ap | horm-ap | a1 | aq | cf. Asserts the proofs' algebraic
// side conditions to 1e-12 and records every constant involved.
// aux: q for aq (the A_q class), r for Hormander flavors.
CertificateReport certificate_exponents(const MatrixWeight& w, double p, const std::string& kind,
                                        double q_aux = 0.0, double r_aux = 0.0,
                                        MaximalMode mode = MaximalMode::AllCubes);

// ----- strong type, Coifman-Fefferman, endpoint ------------------------------

enum class StrongKind { RoughAp, HormAp, A1, Aq };

CertificateReport verify_strong(const MatrixWeight& w, double p, const TSpec& ts, StrongKind kind,
                                int trials, std::uint64_t seed, double q_aux = 0.0,
                                double calibration_ratio = 0.0);

enum class CfKind { Czo, Rough, Hormander };

CertificateReport verify_cf(const MatrixWeight& w, double p, const TSpec& ts, CfKind kind,
                            int trials, std::uint64_t seed, double calibration_ratio = 0.0);

struct CpqResult {
    bool holds = false;
    double worst_ratio = 0.0;
    DyadicCube worst_cube;
    double exterior_mass = 0.0;  // analytic part of the denominator
};

CpqResult cpq_check(const MatrixWeight& w, double p, double q, double gamma,
                    double c_bound = 1.0);

// exact closed-form exterior contribution of int M(chi_Q)^q outside the
// domain; 1D is exact, 2D is the documented radial upper-bound surrogate
double cpq_exterior_mass(const GridGeometry& g, const DyadicCube& q, double qexp);

enum class EndpointKind { Rough, HormanderR };

CertificateReport verify_endpoint(const MatrixWeight& w, const TSpec& ts, EndpointKind kind,
                                  int trials, std::uint64_t seed, double calibration_ratio = 0.0);

// ----- parameter lemmas (exact rational arithmetic) ---------------------------

struct ParamLemmaReport {
    long long points = 0;
    long long violations = 0;
    long long skipped = 0;  // hypothesis-gated grid points, logged
    std::vector<std::string> notes;
};

// grid: rho, beta, p in {1 + k/8 : k = 1..64}; gamma in {1 + k/8, 8 values};
// tau in {3,4,8}; kappa, delta in {1,2,4,16}
ParamLemmaReport param_lemma_checks();

// ----- KeyAp and ApFromRH -----------------------------------------------------

struct KeyApReport {
    double lhs = 0.0;          // sum of upper body-product brackets
    double rhs = 0.0;          // (1/eta) sup|U_Q V_Q| ||M_V h||_p ||M_U g||_{p'}
    double slack = 0.0;        // rhs / lhs
    double sup_uv = 0.0;
};

KeyApReport keyap_check(const MatrixWeight& w, double p, double r, double s,
                        const SparseFamily& family, const GridFunction& h, const GridFunction& g,
                        const std::function<SpdMatrix(const DyadicCube&)>& u,
                        const std::function<SpdMatrix(const DyadicCube&)>& v);

struct ApFromRhReport {
    bool applicable = false;  // both hypothesis RH inequalities within 2n
    double rh_v = 0.0;        // measured RH factor of the V-side hypothesis
    double rh_u = 0.0;
    double max_ratio = 0.0;   // max over probes of |V U e| / |W W' e|
    double bound = 0.0;       // n * rh_v * rh_u
    bool holds = false;
};

ApFromRhReport apfromrh_check(const MatrixWeight& w, double q, double r, double s,
                              const DyadicCube& cube);

// ----- corpus -----------------------------------------------------------------

struct CorpusWeight {
    MatrixWeight weight;
    std::string name;
};

// deterministic certificate corpus for a geometry
std::vector<CorpusWeight> certificate_corpus(int d, int L, int n, std::uint64_t seed);

}  // namespace mwlab
