import utils_beta

def load_beta(path):
    data = utils_beta.read(path)
    data = utils_beta.fix(data)
    return data

def process_beta(data):
    result = data + 1
    result = result * 2
    return result

def main_beta():
    value = load_beta("input")
    out = process_beta(value)
    print(out)
    return out

final_beta = main_beta()
print(final_beta)
