"""Read the spilled-milk sentence, settle it, and show the best reading.

Also solves the hand-written constraint listing exactly and lists every
co-optimal solution.
"""

from storyua.cli import DATA_DIR as DATA, build_discourse, load_config
from storyua.narrative import assemble, read_story, sentence_report, settled_senses, split_story
from storyua.settle import loads_system, solve_exact


def main():
    cfg = load_config("milk.conf")
    d = build_discourse(cfg)
    read_story(d, split_story((DATA / "milk.story").read_text()))
    for line in sentence_report(d):
        print(line)
    print("senses:", settled_senses(d))

    system, _ = assemble(d.state)
    print("generated system:", len(system.variables), "hypotheses,", len(system.hard), "hard,",
          len(system.soft), "soft")

    listing = loads_system((DATA / "milk.cs").read_text())
    optima = solve_exact(listing)
    solutions = list(optima)
    print("listing optimum", optima.score, "with", len(solutions), "co-optimal solutions, first five:")
    for o in solutions[:5]:
        print("  solution", " ".join(str(v) for v in sorted(o.true)))


if __name__ == "__main__":
    main()
