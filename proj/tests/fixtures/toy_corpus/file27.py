import utils_delta

def load_delta(path):
    data = utils_delta.read(path)
    data = utils_delta.fix(data)
    return data

def process_delta(data):
    result = data + 2
    result = result * 2
    return result

def main_delta():
    value = load_delta("input")
    out = process_delta(value)
    print(out)
    return out

final_delta = main_delta()
print(final_delta)
