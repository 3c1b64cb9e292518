# Status codes shared by both kernel backends; severity grows with the value.
OK = 0
CLAMPED_SIGMA = 1
FROZEN_VEGA = 2
INVALID_PRICE = 3
NON_FINITE = 4
