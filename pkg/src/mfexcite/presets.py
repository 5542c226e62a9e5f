"""Shipped scenarios: the figure parameter sets plus a few sweeps.

The fig_* presets carry large particle counts (5e4, 2e4); desk-scale reruns
use ``--override run.N=2000`` (fig_u02) or similar. Particle runs use
dt = 1e-3 and a Gaussian start of covariance sigma^2 K^-1 around m0.
"""

from .config import format_config, parse_config

PRESETS = {
    "fig_u02": """\
[scenario]
name = fig_u02

[model]
name = fhn
u = 1.0
a = 0.3333333333333333
b = 1.0
tau = 10.0

[coupling]
k = 1.0, 1.0
sigma2 = 0.2, 0.2
delta = 0.2

[run]
mode = both
N = 50000
dt = 0.001
t_end = 800.0
record_every = 100
seed = 0
init = gaussian
m0 = -1.0, -0.6666666666666667

[analysis]
cycles = true
cycle_spread = 0.05

[output]
dir = out/fig_u02
prefix = fig_u02
""",
    "fig_SL_pt_stable": """\
[scenario]
name = fig_SL_pt_stable

[model]
name = stuart_landau_modified
omega = 1.0
b = 1.01

[coupling]
k = 1.0, 1.0
sigma = 0.1, 0.1
delta = 0.5

[run]
mode = both
N = 20000
dt = 0.001
t_end = 240.0
record_every = 100
seed = 0
init = gaussian
m0 = 0.14034694904900027, 0.9901029464082226

[analysis]
cycles = true
cycle_spread = 0.05

[output]
dir = out/fig_SL_pt_stable
prefix = fig_SL_pt_stable
""",
    "fig_SL_cycle_limite": """\
[scenario]
name = fig_SL_cycle_limite

[model]
name = stuart_landau_modified
omega = 1.0
b = 1.01

[coupling]
k = 1.0, 1.0
sigma = 0.3, 0.3
delta = 0.5

[run]
mode = both
N = 20000
dt = 0.001
t_end = 240.0
record_every = 100
seed = 0
init = gaussian
m0 = 0.14034694904900027, 0.9901029464082226

[analysis]
cycles = true
cycle_spread = 0.05

[output]
dir = out/fig_SL_cycle_limite
prefix = fig_SL_cycle_limite
""",
    "fig_FHN_bistable_cycle_limite": """\
[scenario]
name = fig_FHN_bistable_cycle_limite

[model]
name = fhn
u = 1.0
a = 0.0
b = 1.45
tau = 10.0

[coupling]
k = 1.0, 1.0
sigma = 0.45, 0.45
delta = 0.5

[run]
mode = both
N = 50000
dt = 0.001
t_end = 360.0
record_every = 100
seed = 0
init = gaussian
m0 = 0.9649012813540153, 0.6654491595544934

[analysis]
cycles = true
cycle_center = 0.0, 0.0
cycle_spread = 0.05

[output]
dir = out/fig_FHN_bistable_cycle_limite
prefix = fig_FHN_bistable_cycle_limite
""",
    "cs_reduced": """\
[scenario]
name = cs_reduced

[model]
name = cucker_smale
d = 1

[coupling]
k = 1.0
sigma2 = 0.2
delta = 1.0

[run]
mode = reduced
dt = 0.01
t_end = 100.0
record_every = 10
m0 = 1.0

[output]
dir = out/cs_reduced
prefix = cs_reduced
""",
    "sweep_fhn_hopf": """\
[scenario]
name = sweep_fhn_hopf

[model]
name = fhn
u = 0.9
a = 0.3333333333333333
b = 1.0
tau = 10.0

[coupling]
k = 1.0, 1.0
sigma2 = 0.0, 0.0
delta = 1.0

[sweep]
detector = hopf
parameter = u
bracket = 0.8, 0.95

[output]
dir = out/sweep_fhn_hopf
prefix = sweep_fhn_hopf
""",
    "sweep_fhn_pitchfork": """\
[scenario]
name = sweep_fhn_pitchfork

[model]
name = fhn
u = 0.9
a = 0.0
b = 1.45
tau = 10.0

[coupling]
k = 1.0, 1.0
sigma2 = 0.0, 0.0
delta = 1.0

[sweep]
detector = pitchfork
parameter = u

[output]
dir = out/sweep_fhn_pitchfork
prefix = sweep_fhn_pitchfork
""",
    "sweep_fhn_snc": """\
[scenario]
name = sweep_fhn_snc

[model]
name = fhn
u = 0.9
a = 0.3333333333333333
b = 1.0
tau = 10.0

[coupling]
k = 1.0, 1.0
sigma2 = 0.0, 0.0
delta = 1.0

[sweep]
detector = snc
parameter = u
bracket = 0.89, 0.93
probe = 3.0, 0.0

[output]
dir = out/sweep_fhn_snc
prefix = sweep_fhn_snc
""",
    "sweep_cs_cycles": """\
[scenario]
name = sweep_cs_cycles

[model]
name = cucker_smale
d = 2

[coupling]
k = 1.0, 1.0
sigma2 = 0.1, 0.1
delta = 1.0

[sweep]
detector = cycle_presence
parameter = sigma2
values = 0.05, 0.1, 0.2, 0.3, 0.4
probe = 1.5, 0.5
t_end = 200.0
dt = 0.01

[output]
dir = out/sweep_cs_cycles
prefix = sweep_cs_cycles
""",
}
ALIASES = {"fig_SL_cycle": "fig_SL_cycle_limite"}


def preset_names():
    return sorted(PRESETS)


def preset_text(name):
    name = ALIASES.get(name, name)
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return PRESETS[name]


def load_preset(name, overrides=()):
    return parse_config(preset_text(name), overrides)


def round_trip_ok(name):
    cfg = load_preset(name)
    return parse_config(format_config(cfg)) == cfg
