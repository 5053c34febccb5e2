import utils_gamma

def load_gamma(path):
    data = utils_gamma.read(path)
    data = utils_gamma.fix(data)
    return data

def process_gamma(data):
    result = data + 1
    result = result * 2
    return result

def main_gamma():
    value = load_gamma("input")
    out = process_gamma(value)
    print(out)
    return out

final_gamma = main_gamma()
print(final_gamma)
