"""Zeros of the Mellin symbol at sigma = 1.8 and the constant built from them.

Two zero families sit between consecutive poles. Each root is bracketed by
the poles, refined, and compared with its large-n asymptotic location.
"""
from smolkin import kernel as K
from smolkin import mellin as ml

sigma = 1.8
print("family  n   root           asymptotic     |M(root)|")
for z in ml.find_zeros(sigma, 6):
    if z.family == 0:
        continue
    print(f"  {z.family}    {z.n:2d}  {z.root:.10f}  {z.asymptotic:.10f}  {abs(ml.m_eval(z.root, sigma)):.1e}")

kb = ml.k_bar(sigma)
_, qint = K.c_star(sigma, 1e-10)
print(f"\nk_bar = {kb:.12f}")
print(f"integral of Q = {qint:.12f}; product with k_bar = {kb * qint:.15f}")
