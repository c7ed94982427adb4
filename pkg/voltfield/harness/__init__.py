# This file is intentionally empty