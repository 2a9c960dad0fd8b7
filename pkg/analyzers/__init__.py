# Analysis package: binning, detection inversion and fits