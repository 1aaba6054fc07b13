"""2D finite elements for the Kerr-nonlinear Helmholtz equation with a
circular absorbing layer, interior-penalty stabilization, and the
iteration schemes and experiment drivers built on top."""

__version__ = "0.1.0"
