#!/usr/bin/env python3
"""Walk through the permutation attack on one run and show the public transcript.

Alice picks a rearrangement of her pair codes as the target, announces the
matching fake permutation in Step 7 and Bob ends up with her chosen key. The
same announcement against the improved protocol only lands with probability
4^-f, where f counts the free Bell codes it creates.
"""

import argparse

import numpy as np

from qkasim.adversary import AttackGoal, attack_run, displacement
from qkasim.countermeasure import ImprovedConfig, attack_run_improved, steering_probability
from qkasim.protocol import Permutation, ProtocolConfig
from qkasim.symbolic import DibitString, final_key
from qkasim.transcript import PUBLIC


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--improved-trials", type=int, default=400)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.n
    ka, kb, m = (DibitString.random(n, rng) for _ in range(3))
    sigma = Permutation.random(n, rng)
    codes = ka ^ m
    ka_prime = DibitString(tuple(codes[sigma(j)] for j in range(n))) ^ m
    goal = AttackGoal(target_final_key=final_key(ka_prime, kb, m))

    out, res = attack_run(ProtocolConfig(n, seed=args.seed), ka, kb, goal, script=list(m))
    print(f"K_A {ka.grouped()}   K_B {kb.grouped()}   M {m.grouped()}")
    print(f"target K'_A {ka_prime.grouped()}   target key {goal.target_final_key}")
    print("\npublic transcript:")
    for e in out.transcript.view(PUBLIC):
        print(f"  {e.stage:<7} {e.kind:<20} {e.payload}")
    print(f"\nBob's key {out.bob_final_key}  ({'attack succeeded' if out.bob_final_key == goal.target_final_key else 'attack failed'})")

    used = Permutation(tuple(out.transcript.find("permutation", "step4")[0].payload["mapping"]))
    cfg = ImprovedConfig(n, seed=args.seed)
    shuffle = displacement(res.fake_perm, used)
    hits = 0
    for i in range(args.improved_trials):
        o, r = attack_run_improved(cfg, ka, kb, shuffle=shuffle, run_index=i)
        hits += o.bob_final_key == r.predicted_bob_key
    predicted = steering_probability(used.compose(shuffle), used)
    print(f"improved protocol, same displacement {list(shuffle.mapping)}: "
          f"{hits}/{args.improved_trials} hits, 4^-f = {predicted:.4f}")


if __name__ == "__main__":
    main()
