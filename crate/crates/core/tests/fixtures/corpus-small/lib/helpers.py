import os


def normalize(path):
    return os.path.normpath(path)


def log(message):
    print(message)
