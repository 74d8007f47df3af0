from hypothesis import settings

# the first call into a compiled kernel pays for JIT compilation
settings.register_profile("lspn", deadline=None)
settings.load_profile("lspn")
