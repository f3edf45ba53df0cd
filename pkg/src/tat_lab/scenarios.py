"""
Shipped scenarios as configuration text.
"""

from .config import ScenarioConfig
from .errors import ConfigError

_DISK_BASIC = """
[domain]
kind = disk
params = 1.0

[speed]
kind = constant
params = 1.0

[source]
kind = bump
params = 0.1, -0.05, 0.45, 1.0

[grid]
n = 256

[time]
T = 4.0

[foliation]
kind = spheres
params = -1.5, 0.0
s_min = 0.5
s_max = 2.5
s_steps = 21
observation = ambient

[inversion]
iters = 15
support_radius = 0.6

[probe]
ensemble = 50
band_limits = 4, 16
seed = 0
"""

SCENARIOS: dict[str, str] = {
    "disk-basic": _DISK_BASIC,
    # observation time below the inradius
    "disk-short": _DISK_BASIC.replace("T = 4.0", "T = 0.5"),
    # slow ring with a stable closed geodesic near r = 0.5 inside K and an
    # unstable one near r = 0.72; leaves stay outside both
    "herglotz-trap": """
[domain]
kind = disk
params = 1.0

[speed]
kind = ring
params = -1.0, 0.4, 0.35

[source]
kind = angular-packet
params = 0.5, 0.1, 16, 1.0

[grid]
n = 256

[time]
T = 4.0

[foliation]
kind = spheres
params = 0.0, 0.0
s_min = 0.8
s_max = 1.0
s_steps = 21

[inversion]
iters = 15
support_radius = 0.7

[probe]
ensemble = 50
band_limits = 4, 16
seed = 0
""",
    # full data on an ellipse; passes once T exceeds the half major axis
    "ellipse-major": """
[domain]
kind = ellipse
params = 1.0, 0.6

[speed]
kind = constant
params = 1.0

[source]
kind = bump
params = 0.0, 0.0, 0.25, 1.0

[grid]
n = 256

[time]
T = 1.02

[foliation]
kind = bent-geodesic
params = -1.1, 0.0, 0.05
s_min = -1.0
s_max = 1.0
s_steps = 41
observation = leaf

[inversion]
support_radius = 0.3
""",
    # Γ = ∂Ω ∩ {x¹ > 0.6}; the cap is reached once T exceeds a₁ − C = 0.4
    "halfspace-cap": """
[domain]
kind = ellipse
params = 1.0, 0.8
gamma_halfspace = 0.6

[speed]
kind = constant
params = 1.0

[source]
kind = bump
params = 0.0, 0.0, 0.12, 1.0

[grid]
n = 256

[time]
T = 0.45

[foliation]
kind = perturbed-planes
params = 0.1
s_min = 0.6
s_max = 1.0
s_steps = 21
observation = ambient

[inversion]
support_radius = 0.15
""",
    # uniqueness from outside stops at the outermost closed geodesic
    "annulus-trap": """
[domain]
kind = disk
params = 1.0

[speed]
kind = ring
params = 1.2, 0.5, 0.4

[source]
kind = bump
params = 0.0, 0.0, 0.5, 1.0

[grid]
n = 256

[time]
T = 4.0

[foliation]
kind = spheres
params = 0.0, 0.0
s_min = 0.55
s_max = 1.0
s_steps = 19

[inversion]
support_radius = 0.6
""",
    "neumann-consistency": """
[domain]
kind = disk
params = 1.0

[speed]
kind = constant
params = 1.0

[source]
kind = bump
params = 0.0, 0.0, 0.5, 1.0

[grid]
n = 128

[time]
T = 1.5

[inversion]
support_radius = 0.5
""",
    # twin experiment: recover c̃ = 1 + 0.05 bump from Λ̃f with f = |x|²/2 on K
    "twin-speed": """
[domain]
kind = disk
params = 1.0

[speed]
kind = constant
params = 1.0

[truth]
kind = bump-sum
params = 0.05, 0.0, 0.0, 0.3

[source]
kind = quadratic-bump
params = 0.5, 0.9

[grid]
n = 128

[time]
T = 4.0

[inversion]
iters = 8
outer_iters = 5
floor = 0.2
support_radius = 0.35
""",
    # f harmonic on K: the speed update is undetermined
    "twin-harmonic": """
[domain]
kind = disk
params = 1.0

[speed]
kind = constant
params = 1.0

[truth]
kind = bump-sum
params = 0.05, 0.0, 0.0, 0.3

[source]
kind = saddle-bump
params = 0.5, 0.9

[grid]
n = 128

[time]
T = 4.0

[inversion]
iters = 8
outer_iters = 5
support_radius = 0.35
""",
}


def list_scenarios() -> list[str]:
    return sorted(SCENARIOS)


def get_scenario(name: str) -> ScenarioConfig:
    """
    Shipped scenario by name.

    Raises:
        ConfigError: For unknown names
    """
    key = name.lower()
    if key not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{name}'. Use one of {list_scenarios()}")
    return ScenarioConfig.from_text(SCENARIOS[key], name=key)
