# Jordan-Wigner free-fermion oracle