# Models package for tll-lab