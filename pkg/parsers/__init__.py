# Parsers package for tll-lab