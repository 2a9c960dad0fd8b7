# Ring geometry and coupling matrices