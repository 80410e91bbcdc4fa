"""Follow the candidate categories for the Norman story's mystery object."""

from storyua.cli import DATA_DIR as DATA, build_discourse, load_config
from storyua.narrative import category_set, read_story, split_story


def main():
    d = build_discourse(load_config("norman.conf"))
    for k, text in enumerate(split_story((DATA / "norman.story").read_text()), start=1):
        read_story(d, [text])
        cats, indefinite = category_set(d)
        marker = " (indefinite)" if indefinite else ""
        print(f"{k}: {text}")
        print(f"   categories: {{{', '.join(sorted(cats))}}}{marker}")


if __name__ == "__main__":
    main()
