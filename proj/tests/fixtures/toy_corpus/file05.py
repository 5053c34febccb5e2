import utils_sigma

def load_sigma(path):
    data = utils_sigma.read(path)
    data = utils_sigma.fix(data)
    return data

def process_sigma(data):
    result = data + 0
    result = result * 2
    return result

def main_sigma():
    value = load_sigma("input")
    out = process_sigma(value)
    print(out)
    return out

final_sigma = main_sigma()
print(final_sigma)
