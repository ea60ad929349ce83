"""Exact Weil-Petersson volumes, psi/kappa_1 intersection numbers and large-n asymptotics."""

from .bessel import BesselContext, bessel_I0, bessel_J, make_context
from .exactnum import PiMonomial, PiPolynomial, pi_add, pi_mul, pi_to_float
from .psi import PsiEngine, TauKey, check_dilaton, check_string, psi_intersection
from .volumes import (
    BracketTable,
    VolumePolynomial,
    genus0_volume_stream,
    kappa1_reduce,
    tau_bracket,
    volume_const,
    volume_eval,
    volume_polynomial,
)

__version__ = "0.1.0"
