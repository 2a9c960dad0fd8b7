# Eigensolvers, propagation, spectra and thermal states