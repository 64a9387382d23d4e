"""Physical constants and unit conventions.

Energies are kcal/mol throughout the package; temperatures are Kelvin.
Time units are arbitrary but must be consistent within a run.
"""

#: Boltzmann constant in kcal/(mol*K).
KB_KCAL_PER_MOL_K = 0.0019872041

#: Default simulation / analysis temperature in Kelvin.
DEFAULT_TEMPERATURE = 300.0


def kbt(temperature: float) -> float:
    """Thermal energy k_B*T in kcal/mol for a temperature in Kelvin."""
    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    return KB_KCAL_PER_MOL_K * temperature
