import utils_alpha

def load_alpha(path):
    data = utils_alpha.read(path)
    data = utils_alpha.fix(data)
    return data

def process_alpha(data):
    result = data + 4
    result = result * 2
    return result

def main_alpha():
    value = load_alpha("input")
    out = process_alpha(value)
    print(out)
    return out

final_alpha = main_alpha()
print(final_alpha)
