import os

TEST_SLOW = bool(os.getenv("LRD_TEST_SLOW"))
TEST_REPS = int(os.getenv("LRD_TEST_REPS", "1000"))
TEST_SEED = int(os.getenv("LRD_TEST_SEED", "20240611"))
