import numpy as np
from numba import njit

from ..utils.errors import EigenFailure

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

@njit
def _jacobi_sweeps(a,tol,max_sweeps):
    n = a.shape[0]
    A = a.copy()
    V = np.eye(n)
    fro = np.sqrt(np.sum(A*A))
    for sweep in range(max_sweeps+1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i,j]*A[i,j]
        if np.sqrt(off) <= tol*fro:
            return np.diag(A).copy(),V,sweep,True
        if sweep == max_sweeps:
            break
        for p in range(n-1):
            for q in range(p+1,n):
                apq = A[p,q]
                if apq == 0.0:
                    continue
                theta = (A[q,q] - A[p,p])/(2.0*apq)
                if theta >= 0.0:
                    t = 1.0/(theta + np.sqrt(theta*theta + 1.0))
                else:
                    t = -1.0/(-theta + np.sqrt(theta*theta + 1.0))
                c = 1.0/np.sqrt(t*t + 1.0)
                s = t*c
                for k in range(n):
                    akp = A[k,p]
                    akq = A[k,q]
                    A[k,p] = c*akp - s*akq
                    A[k,q] = s*akp + c*akq
                for k in range(n):
                    apk = A[p,k]
                    aqk = A[q,k]
                    A[p,k] = c*apk - s*aqk
                    A[q,k] = s*apk + c*aqk
                for k in range(n):
                    vkp = V[k,p]
                    vkq = V[k,q]
                    V[k,p] = c*vkp - s*vkq
                    V[k,q] = s*vkp + c*vkq
    return np.diag(A).copy(),V,max_sweeps,False

def jacobi_eigh(a,tol=JACOBI_TOL,max_sweeps=JACOBI_MAX_SWEEPS):
    """
    Eigen-decomposition of a real symmetric matrix by the cyclic Jacobi method.

    Usage:
        w,U = jacobi_eigh(P)

    Inputs:
        a -> [2d float array] symmetric matrix; it is symmetrized before the sweeps

    Parameters:
        tol -> [float, default=1e-12] convergence when the off-diagonal Frobenius norm falls below
        tol times the Frobenius norm of the matrix
        max_sweeps -> [int, default=100] maximum number of full cyclic sweeps

    Outputs:
        w -> [float array] eigenvalues in ascending order
        U -> [2d float array] orthonormal eigenvectors as columns, a = U diag(w) U^T
    """
    a = np.asarray(a,dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError('square matrix expected, got shape {!r}'.format(a.shape))
    if not np.all(np.isfinite(a)):
        raise EigenFailure('matrix contains non-finite entries')
    a = 0.5*(a + a.T)
    w,U,sweeps,converged = _jacobi_sweeps(a,tol,max_sweeps)
    if not converged:
        raise EigenFailure('Jacobi sweeps did not converge in {:d} sweeps'.format(max_sweeps))
    order = np.argsort(w,kind='stable')
    return w[order],U[:,order]
