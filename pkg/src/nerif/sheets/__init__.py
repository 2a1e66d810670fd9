"""Sheet composer: reference and test sheet rasters."""
