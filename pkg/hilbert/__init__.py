# Fixed-magnetization bases and matrix-free operators