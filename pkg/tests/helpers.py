def random_matrix(rng, n=3, size=None):
    """Standard complex Gaussian matrix, or a stack of ``size`` of them."""
    shape = (n, n) if size is None else (size, n, n)
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
