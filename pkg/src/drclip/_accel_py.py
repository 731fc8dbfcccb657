"""Pure numpy fallback for the bootstrap kernel.

Operation order matches the compiled version term for term so the two
backends produce bit-identical output.
"""

import numpy as np


def w_transform_into(normals, chol, out):
    n0 = normals[:, 0]
    n1 = normals[:, 1]
    n2 = normals[:, 2]
    z0 = chol[0, 0] * n0
    z1 = chol[1, 0] * n0 + chol[1, 1] * n1
    z2 = (chol[2, 0] * n0 + chol[2, 1] * n1) + chol[2, 2] * n2
    lo = np.minimum(z0, z1)
    hi = np.maximum(z0, z1)
    np.subtract(z0 + z1, np.minimum(np.maximum(z2, lo), hi), out=out)
