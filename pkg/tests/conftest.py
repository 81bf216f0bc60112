from hypothesis import settings

# the whole suite must be reproducible run to run
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")
