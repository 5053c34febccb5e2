import utils_omega

def load_omega(path):
    data = utils_omega.read(path)
    data = utils_omega.fix(data)
    return data

def process_omega(data):
    result = data + 2
    result = result * 2
    return result

def main_omega():
    value = load_omega("input")
    out = process_omega(value)
    print(out)
    return out

final_omega = main_omega()
print(final_omega)
