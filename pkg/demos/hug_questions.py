"""Read the elevator robbery story and answer the shipped questions."""

from storyua.cli import DATA_DIR as DATA, build_discourse, load_config, read_questions
from storyua.narrative import read_story, split_story, state_hash
from storyua.qa import ask, format_answer


def main():
    d = build_discourse(load_config("hug.conf"))
    read_story(d, split_story((DATA / "hug.story").read_text()))
    before = state_hash(d)
    for question in read_questions([DATA / "hug.questions"]):
        print("question:", question)
        for line in format_answer(ask(d, question)):
            print("  " + line)
    print("discourse unchanged:", state_hash(d) == before)


if __name__ == "__main__":
    main()
