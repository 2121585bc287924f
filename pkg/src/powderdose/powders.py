"""Calibrated powder archetypes for the simulated plant.

Three behavioural classes:

glass-beads   free-flowing reference material. No arching, tight flow
              noise, never needs vibration.
msg           free-flowing but cohesive enough to arch at the smallest
              openings, noisier flow, and slow enough overall that large
              targets exceed what gravity alone can deliver per step, which
              pulls in the vibration fallback.
tio2          cohesive fine powder. The critical arch diameter exceeds the
              largest orifice the valve can open, so gravity flow is
              identically zero and every productive step needs vibration.
              Low bulk density limits the hopper charge to 4000 mg.

Numbers are calibrated against the default valve (kappa = 0.05 mm/unit,
L <= 210, dwell <= 20 s) so that measurable per-step drops range from the
0.5 mg observability floor up to a few grams and closed-loop trials finish
in modest step counts (roughly 5 to 60).
"""

from __future__ import annotations

from dataclasses import replace

from .flow import PowderSpec

GLASS_BEADS = PowderSpec(
    name="glass-beads",
    bulk_density=1.5,
    particle_diameter=0.02,
    flow_coefficient=0.58,
    particle_correction=1.4,
    critical_arch_diameter=0.0,
    vibration_gain=1.5,
    flow_noise_sigma=0.05,
    initial_load=5000.0,
)

MSG = PowderSpec(
    name="msg",
    bulk_density=0.72,
    particle_diameter=0.3,
    flow_coefficient=0.0025,
    particle_correction=1.4,
    critical_arch_diameter=0.45,
    vibration_gain=5.0,
    flow_noise_sigma=0.10,
    initial_load=5000.0,
)

TIO2 = PowderSpec(
    name="tio2",
    bulk_density=0.5,
    particle_diameter=0.005,
    flow_coefficient=0.30,
    particle_correction=1.4,
    critical_arch_diameter=12.0,
    vibration_gain=2.5,
    flow_noise_sigma=0.15,
    initial_load=4000.0,
)

ARCHETYPES: dict[str, PowderSpec] = {
    GLASS_BEADS.name: GLASS_BEADS,
    MSG.name: MSG,
    TIO2.name: TIO2,
}


def archetype(name: str, **overrides) -> PowderSpec:
    """Fetch an archetype by name, optionally overriding fields.

    Overrides go through PowderSpec validation; unknown field names raise.
    """
    try:
        base = ARCHETYPES[name]
    except KeyError:
        known = ", ".join(sorted(ARCHETYPES))
        raise ValueError(f"unknown powder archetype {name!r} (known: {known})")
    if not overrides:
        return base
    return replace(base, **overrides)
