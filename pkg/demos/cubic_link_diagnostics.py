"""A link that fails: Q(x) = 2 - x + 12x^2 - 12x^3 on X- = [0, 1).

Q folds twice on [0, 1) and overshoots 2 near x = 0.62, so it is neither
injective nor maps into X+.  The checker still reports every condition,
including the nonzero value of the Jacobian-weighted integral.
"""

from fractions import Fraction

from salvage import LinkError, check_link, gallery, make_link, partition_signs

spec = gallery("example2")
part = partition_signs(spec.omega, spec.domain, spec.g_prime)
link = make_link(spec.link, part)
for seg in link.segments:
    print(seg.direction, seg.interval, "values", (seg.value_min, seg.value_max))

try:
    check_link(spec.omega, spec.g_prime, link, part)
except LinkError as exc:
    print("rejected:", exc)
    for f in exc.findings:
        print("  ", f.kind, "|", f.message)
    rep = exc.report

print("A2 minimum", rep.a2_min, "at x =", rep.a2_witness)
print("A3 integral", rep.a3_integral.value, "~", Fraction(rep.a3_integral.value).limit_denominator(1000))
print("A4 integral", rep.a4_integral.value)
print("verdicts", rep.verdicts)

# restricting to one monotone branch gives an injective link that still escapes
branch = make_link(spec.link, part, branch=1)
rep = check_link(spec.omega, spec.g_prime, branch, part, strict=False)
print("branch 1:", [f.kind for f in rep.findings])
