# ==========================================
# ====== Price class / size bin bounds ======
# ==========================================

# Edges of the middle interval. Below lower -> A, at or above upper -> C.
PRICE_BOUNDS = (603_500_000, 1_487_500_000)
"""Rupiah bounds separating Price_A / Price_B / Price_C."""

LAND_BOUNDS = (107.0, 175.5)
"""Land size bounds in m2."""

BUILDING_BOUNDS = (89.0, 171.0)
"""Building size bounds in m2."""

# ==============================
# ====== Model parameters ======
# ==============================

DEF_TRAIN_RATIO = 0.7
DEF_MAX_DEPTH = 8
DEF_MIN_LEAF = 5
DEF_MIN_GAIN = 1e-7
DEF_CRITERION = "gini"
DEF_K = 5

MAX_SEED = 2**64 - 1

# ===================================
# ====== Synthetic listing data ======
# ===================================

BANDUNG_DISTRICTS = (
    "Antapani, Bandung",
    "Arcamanik, Bandung",
    "Bojongsoang, Bandung",
    "Cibiru, Bandung",
    "Cikutra, Bandung",
    "Cimahi, Bandung",
    "Ciwastra, Bandung",
    "Geger Kalong, Bandung",
    "Hegarmanah, Bandung",
    "Katapang, Bandung",
    "Kopo, Bandung",
    "Setiabudi, Bandung",
    "Ujungberung, Bandung",
)
"""Default location pool for generated listings."""

SYNTH_BUILDING_RANGE = (30.0, 400.0)
"""Generated building sizes in m2, drawn uniformly."""

SYNTH_LAND_RANGE = (40.0, 500.0)
"""Generated land sizes in m2, drawn uniformly."""

# bedrooms ~ round(BEDROOM_BASE + building / M2_PER_BEDROOM + noise), at least 1
BEDROOM_BASE = 1.2
M2_PER_BEDROOM = 60.0
MAX_BEDROOMS = 8

# bathrooms ~ round(BATHROOMS_PER_BEDROOM * bedrooms + noise), 1 .. bedrooms
BATHROOMS_PER_BEDROOM = 0.6

# Generated prices are multiples of this amount.
PRICE_STEP = 5_000_000
