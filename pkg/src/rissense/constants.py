"""Physical constants shared across the toolkit."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s
