import sys

from src.ferro_fhd.engine import run


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
