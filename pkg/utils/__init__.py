# Utils package for tll-lab