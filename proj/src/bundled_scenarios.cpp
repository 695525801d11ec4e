#include "fisherq/scenario.hpp"

namespace fisherq {

namespace {

struct Bundled {
  const char* name;
  const char* text;
};

constexpr const char* kFreePacket = R"cfg(
# free Gaussian packet, periodic line
scenario.name = free_packet
grid.ndim = 1
grid.points = 512
grid.lengths = 30
potential.v = 0

state.kind = gaussian
state.center = -2
state.sigma = 1.2
state.momentum = 0.5

evolve.dt = 0.002
evolve.steps = 500
output.every = 2

verify.ehrenfest = true
verify.residuals = true
verify.norm = true
)cfg";

constexpr const char* kHarmonicCoherent = R"cfg(
# coherent state of the omega = 1/2 harmonic well (displaced ground state,
# width sqrt(hbar/2 m omega) = 1)
scenario.name = harmonic_coherent
grid.ndim = 1
grid.points = 256
grid.lengths = 22
potential.v = 0.125*x^2

state.kind = gaussian
state.center = 1
state.sigma = 1
state.momentum = 0

evolve.dt = 0.002
evolve.steps = 500
output.every = 2

verify.ehrenfest = true
verify.residuals = true
verify.norm = true
)cfg";

constexpr const char* kLarmor = R"cfg(
# spin precession of a tipped uniform spinor in a uniform magnetic field
scenario.name = larmor
grid.ndim = 1
grid.points = 64
grid.lengths = 16
potential.v = 0

zeeman.enabled = true
zeeman.bx = 0
zeeman.by = 0
zeeman.bz = 1

state.kind = gaussian
state.center = 0
state.sigma = 1.5
state.momentum = 0
state.spin_theta = 1.5707963267948966
state.spin_phi = 0

evolve.dt = 0.01
evolve.steps = 3200
output.every = 2

verify.ehrenfest = true
verify.norm = true
)cfg";

constexpr const char* kSternGerlach = R"cfg(
# Zeeman-only gradient model: B_z = B0 + b z with z the grid axis.
# The linear-gradient field ignores div B = 0; claims are confined to the
# z force law, the standard textbook idealization.
scenario.name = stern_gerlach
grid.ndim = 1
grid.points = 256
grid.lengths = 24
potential.v = 0

zeeman.enabled = true
zeeman.bx = 0
zeeman.by = 0
zeeman.bz = 1 + 0.05*x

state.kind = gaussian
state.center = 0
state.sigma = 1.5
state.momentum = 0
state.spin_theta = 0

evolve.dt = 0.002
evolve.steps = 500
output.every = 2

verify.ehrenfest = true
verify.norm = true
)cfg";

constexpr const char* kAbRing = R"cfg(
# ring-confined packet pair around an ideal flux line:
# A = (flux/2pi) (-y, x)/r^2, B = 0 on the annulus (center regularized far
# below the density support), interference after half a revolution
scenario.name = ab_ring
grid.ndim = 2
grid.points = 192
grid.lengths = 24
potential.v = 0.5*((x^2+y^2+1e-10)^0.5 - 6)^2

gauge.phi = 0
gauge.ax = 1.0/(2*pi) * (0 - y) / (x^2 + y^2 + 1e-10)
gauge.ay = 1.0/(2*pi) * x / (x^2 + y^2 + 1e-10)

state.kind = gaussian_pair
state.center = 6,0
state.center2 = 6,0
state.sigma = 1
state.momentum = 0,2
state.momentum2 = 0,-2

evolve.dt = 0.0125
evolve.steps = 754
output.every = 754
output.snapshots = true

verify.norm = true
)cfg";

constexpr const char* kTwoParticle = R"cfg(
# two non-interacting particles on a line (configuration space is 2-d);
# the factorized initial state must stay factorized
scenario.name = two_particle
grid.ndim = 2
grid.points = 128
grid.lengths = 16
particles.count = 2
particles.dim = 1
potential.v = 0.5*x^2 + 0.5*y^2

state.kind = gaussian
state.center = 0.5,-0.4
state.sigma = 0.8,1.2
state.momentum = 0,0

evolve.dt = 0.005
evolve.steps = 200
output.every = 10

verify.ehrenfest = true
verify.residuals = true
verify.norm = true
)cfg";

constexpr const char* kClassicalHarmonic = R"cfg(
# hbar = 0 field theory of the harmonic well by characteristics, plus the
# quantum-to-classical convergence study
scenario.name = classical_harmonic
scenario.mode = classical
grid.ndim = 1
grid.points = 512
grid.lengths = 24
potential.v = 0.5*x^2

state.kind = gaussian
state.center = 1
state.sigma = 1
state.s0 = 0.3*x

evolve.dt = 0.002

classical.samples = 20000
classical.dt = 0.001
classical.t_final = 1.0
classical.hbar_study = 1,0.5,0.25,0.125
)cfg";

constexpr Bundled kBundled[] = {
    {"free_packet", kFreePacket},
    {"harmonic_coherent", kHarmonicCoherent},
    {"larmor", kLarmor},
    {"stern_gerlach", kSternGerlach},
    {"ab_ring", kAbRing},
    {"two_particle", kTwoParticle},
    {"classical_harmonic", kClassicalHarmonic},
};

}  // namespace

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  for (const auto& b : kBundled) names.push_back(b.name);
  return names;
}

const char* bundled_scenario_text(const std::string& name) {
  for (const auto& b : kBundled)
    if (name == b.name) return b.text;
  return nullptr;
}

}  // namespace fisherq
